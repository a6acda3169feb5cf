#pragma once

#include <string>
#include <vector>

#include "stfm/config.hpp"
#include "stfm/hstf.hpp"
#include "stfm/pbtf.hpp"
#include "stfm/qformer.hpp"
#include "stfm/synth.hpp"

namespace stfm {

// Every trainable tensor of the pipeline. The text branch aliases the image
// branch when share_qformers is set, and pos_table exists only for the
// learned-positional ablation (vpe off).
struct ModelParams {
  QFormerParams img_qformer;
  QFormerParams txt_qformer;
  PbtfParams pbtf;
  HstfParams hstf;
  Tensor pos_table;  // T x D, empty unless vpe is off
  bool share_qformers = false;

  const QFormerParams& text_params() const {
    return share_qformers ? img_qformer : txt_qformer;
  }
};

struct ModelGrads {
  QFormerGrads img_qformer;
  QFormerGrads txt_qformer;
  PbtfGrads pbtf;
  HstfGrads hstf;
  Tensor pos_table;
  bool share_qformers = false;
  bool has_pos_table = false;
};

struct NamedTensorRef {
  std::string name;
  Tensor* tensor;
};

ModelParams init_model_params(const ExperimentConfig& cfg);
ModelGrads zero_model_grads(const ModelParams& p);

// Canonical flat views, in a fixed order shared by params, grads, the
// optimizer state and the checkpoint format.
std::vector<NamedTensorRef> named_tensors(ModelParams& p);
std::vector<NamedTensorRef> named_tensors(ModelGrads& g);

struct ModelCache {
  std::vector<QFormerCache> img;  // one per frame
  QFormerCache txt;
  VideoSemantics vq;
  TextSemantics pq;
  StfmCache stfm;
  Tensor pred;  // d, mean over filtered-token rows
  double loss = 0.0;
};

struct ForwardResult {
  double loss = 0.0;
  Tensor pred;
  StfmOutput out;
};

StfmOptions stfm_options(const ExperimentConfig& cfg);
VpeConfig vpe_config(const ExperimentConfig& cfg);

// MSE(mean-pooled filtered tokens, target) over the full pipeline.
ForwardResult model_forward(const SyntheticInstance& inst, const ModelParams& mp,
                            const ExperimentConfig& cfg, ModelCache* cache = nullptr);

// Accumulates d(loss)/d(params) scaled by loss_scale into grads. Requires
// the cache produced by model_forward on the same inputs.
void model_backward(const SyntheticInstance& inst, const ModelParams& mp,
                    const ExperimentConfig& cfg, const ModelCache& cache,
                    double loss_scale, ModelGrads& grads);

}  // namespace stfm
