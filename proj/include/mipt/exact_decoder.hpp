// Exact decoding of the reference qubit. One symbolic simulation pass tracks
// every stabilizer sign as an affine GF(2) function of undetermined-outcome
// variables; at purification the reference-only element's sign function IS
// the decoding equation: p_R * s_{j_1} * ... * s_{j_m} = c, where the j_k are
// the key measurements and outcome bits are b = (1-s)/2.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mipt/bits.hpp"
#include "mipt/circuit.hpp"
#include "mipt/tableau.hpp"
#include "mipt/trajectory.hpp"

namespace mipt {

struct MeasurementSlot {
  size_t layer = 0;  // 0-based internally; reported 1-based like t_p
  size_t site = 0;
};

struct KeyMeasurementReport {
  std::vector<MeasurementSlot> slots;  // execution order (layer, then site)
  std::vector<uint8_t> determined;     // per slot
  std::vector<size_t> var_slot;        // variable index -> slot index
  std::vector<std::pair<size_t, AffineSign>> constraints;  // determined slots
  size_t t_p = 0;
  Axis axis = Axis::Z;
  AffineSign ref_expr;            // sign function of the reference element
  std::vector<size_t> key_vars;   // variable indices with nonzero coefficient
  std::vector<size_t> key_slots;  // the same key measurements as slot indices

  bool c_negative() const { return ref_expr.negative; }
  int c() const { return ref_expr.negative ? -1 : 1; }
};

struct AnalyzeOptions {
  bool validate_tableau = false;
};

inline KeyMeasurementReport analyze_circuit(const CircuitInstance& inst,
                                            const AnalyzeOptions& opts = {}) {
  SymbolicTableau t(inst.num_qubits());
  prepare_initial_state(inst, t);
  KeyMeasurementReport rep;
  size_t vars = 0;
  for (size_t layer = 0; layer < inst.depth(); ++layer) {
    for (const GatePlacement& g : inst.layers[layer]) {
      t.apply_gate(g.gate, g.a, g.b);
    }
    for (size_t site : inst.measure_sites[layer]) {
      size_t slot = rep.slots.size();
      rep.slots.push_back({layer, site});
      auto r = t.measure_z(site, [&] {
        rep.var_slot.push_back(slot);
        return AffineSign::variable(vars++);
      });
      rep.determined.push_back(r.determined ? 1 : 0);
      if (r.determined) {
        rep.constraints.emplace_back(slot, r.value);
      }
    }
    if (opts.validate_tableau && !t.check_invariants()) {
      throw std::logic_error("tableau invariants broken during analysis");
    }
    if (rep.t_p == 0 && !inst.measure_sites[layer].empty()) {
      if (auto elem = t.element_on_single_qubit(inst.ref_index())) {
        rep.t_p = layer + 1;
        rep.axis = elem->axis;
        rep.ref_expr = elem->sign;
      }
    }
  }
  if (rep.t_p == 0) {
    throw std::runtime_error("circuit not decodable at depth T");
  }
  rep.key_vars = rep.ref_expr.coeffs.set_bits();
  for (size_t v : rep.key_vars) {
    rep.key_slots.push_back(rep.var_slot[v]);
  }
  return rep;
}

// Outcome lookup: returns -1/0/+1 for a (layer, site) slot, 0 meaning the
// slot is not visible (cropped away or unmeasured).
using OutcomeFn = std::function<int(size_t layer, size_t site)>;

inline OutcomeFn outcomes_of(const TrajectoryRecord& rec) {
  return [&rec](size_t layer, size_t site) -> int {
    if (layer >= rec.rows || site >= rec.cols) {
      return 0;
    }
    return rec.at(layer, site);
  };
}

// Lookup into a (possibly windowed) dataset record.
inline OutcomeFn outcomes_of(const Dataset& ds, const DatasetRecord& rec) {
  size_t L = ds.L;
  if (!ds.window) {
    return [&rec, cols = static_cast<size_t>(ds.L), rows = static_cast<size_t>(ds.T)](
               size_t layer, size_t site) -> int {
      if (layer >= rows || site >= cols) {
        return 0;
      }
      return rec.outcomes[layer * cols + site];
    };
  }
  WindowSpec w = *ds.window;
  return [&rec, w, L](size_t layer, size_t site) -> int {
    if (layer >= w.depth || !w.contains_site(site, L)) {
      return 0;
    }
    return rec.outcomes[layer * w.width + w.column_of(site, L)];
  };
}

// p_R = c * prod over key slots of the recorded outcome.
inline int predict(const KeyMeasurementReport& rep, const OutcomeFn& outcome) {
  int prod = rep.c();
  for (size_t slot : rep.key_slots) {
    int s = outcome(rep.slots[slot].layer, rep.slots[slot].site);
    if (s == 0) {
      throw std::runtime_error("window too small: key measurement not visible");
    }
    prod *= s;
  }
  return prod;
}

// Verify every fully visible determined-slot constraint:
// s_slot = (-1)^(expr evaluated at the undetermined outcome bits).
inline bool check_constraints(const KeyMeasurementReport& rep, const OutcomeFn& outcome) {
  BitVec assignment(rep.var_slot.empty() ? 1 : rep.var_slot.size());
  std::vector<uint8_t> visible(rep.var_slot.size(), 0);
  for (size_t v = 0; v < rep.var_slot.size(); ++v) {
    const MeasurementSlot& ms = rep.slots[rep.var_slot[v]];
    int s = outcome(ms.layer, ms.site);
    if (s != 0) {
      visible[v] = 1;
      assignment.set(v, s < 0);
    }
  }
  for (const auto& [slot, expr] : rep.constraints) {
    const MeasurementSlot& ms = rep.slots[slot];
    int s = outcome(ms.layer, ms.site);
    if (s == 0) {
      continue;
    }
    bool all_visible = true;
    for (size_t v : expr.coeffs.set_bits()) {
      if (!visible[v]) {
        all_visible = false;
        break;
      }
    }
    if (!all_visible) {
      continue;
    }
    if (expr.evaluate(assignment) != (s < 0)) {
      return false;
    }
  }
  return true;
}

}  // namespace mipt
