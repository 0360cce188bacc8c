// Decode one purifying circuit three ways and compare: the recorded label of
// each trajectory, the exact parity decoder, and a small network trained on
// light-cone outcomes. The exact decoder matches every label; the network
// should come close after a thousand training trajectories.
#include <cstdio>

#include "mipt/exact_decoder.hpp"
#include "mipt/nn.hpp"
#include "mipt/trajectory.hpp"

using namespace mipt;

int main() {
  CircuitInstance inst;
  TrajectoryRecord probe;
  for (uint64_t seed = 0;; ++seed) {
    inst = build_circuit(CircuitSpec::make(12, 12, 0.3, seed));
    probe = run_trajectory(inst, 0, {.min_layers = 1});
    if (probe.purified() && probe.t_p >= 2) {
      break;
    }
  }
  std::printf("circuit seed %llu purifies at t_p=%zu on axis %c\n",
              static_cast<unsigned long long>(inst.spec.circuit_seed), probe.t_p,
              axis_letter(*probe.axis));

  KeyMeasurementReport rep = analyze_circuit(inst);
  std::printf("measurements: %zu total, %zu key, sign c=%+d\n", rep.slots.size(),
              rep.key_slots.size(), rep.c());
  for (size_t slot : rep.key_slots) {
    std::printf("  key at layer %zu, site %zu\n", rep.slots[slot].layer + 1,
                rep.slots[slot].site);
  }

  WindowSpec window = lightcone_window(inst, probe.t_p);
  Dataset train_ds = generate_dataset(inst, 1000, window);
  nn::Cnn<float> model = nn::build_model<float>(train_ds.record_rows(),
                                                train_ds.record_cols(), 1000, /*seed=*/1);
  nn::TrainConfig tc;
  tc.max_epochs = 60;
  tc.seed = hash_u64s({1, tag::kShuffle});
  auto images = nn::images_of<float>(train_ds);
  auto targets = nn::targets_of<float>(train_ds);
  nn::TrainResult tr = nn::train(model, images, targets, tc);
  std::printf("trained %zu epochs, best validation loss %.4f\n", tr.epochs, tr.best_val_loss);

  GenerateOptions gen;
  gen.first_trajectory_seed = uint64_t{1} << 32;
  Dataset test_ds = generate_dataset(inst, 500, window, gen);
  auto test_images = nn::images_of<float>(test_ds);
  size_t exact_hits = 0;
  size_t nn_hits = 0;
  nn::Trace<float> trace;
  for (size_t i = 0; i < test_ds.records.size(); ++i) {
    int truth = test_ds.records[i].label;
    if (predict(rep, outcomes_of(test_ds, test_ds.records[i])) == truth) {
      ++exact_hits;
    }
    if (nn::classify(model, trace, test_images[i]) == truth) {
      ++nn_hits;
    }
  }
  std::printf("exact decoder: %zu/500 correct\n", exact_hits);
  std::printf("trained model: %zu/500 correct\n", nn_hits);
  return 0;
}
