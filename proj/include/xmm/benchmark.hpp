#pragma once

#include "xmm/synth.hpp"
#include "xmm/trainer.hpp"

namespace xmm {

/// The fixed-seed desk benchmark used for the ablation and distance-shift
/// checks: 20 identities in d=32 with anchors packed closely enough that
/// cross-modality retrieval is not trivially perfect, 30% of identities split
/// into two visible sub-clusters, 10 pretraining + 20 matching epochs.
struct Benchmark {
  SynthConfig synth;
  TrainConfig train;
};

Benchmark reference_benchmark();

}  // namespace xmm
