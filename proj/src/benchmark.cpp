#include "xmm/benchmark.hpp"

namespace xmm {

Benchmark reference_benchmark() {
  Benchmark b;
  b.synth.n_ids = 20;
  b.synth.per_id_per_modality = 16;
  b.synth.dim = 32;
  b.synth.intra_sigma = 0.05;
  b.synth.modality_shift = 0.3;
  b.synth.split_prob = 0.3;
  b.synth.split_offset = 0.4;
  b.synth.anchor_spread = 0.3;
  b.synth.seed = 7;

  b.train = desk_preset();
  b.train.epochs = 30;
  b.train.pretrain_epochs = 10;
  // Embeddings are the parameters here, so the step size is far larger than
  // an encoder's and is held constant over the short schedule.
  b.train.lr = 0.03;
  b.train.lr_decay_epochs = {};
  b.train.dbscan.eps = 0.2;
  b.train.dbscan.min_pts = 4;
  b.train.seed = 0;
  return b;
}

}  // namespace xmm
