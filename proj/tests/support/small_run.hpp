#pragma once

// A small synthetic corpus with tiny embedders, for tests that need a full
// fit in well under a second.

#include "adscan/experiment.hpp"
#include "adscan/synthetic.hpp"

namespace adscan::testing {

inline pipeline::PipelineConfig small_config() {
  pipeline::PipelineConfig c;
  c.synthetic.control_docs = 20;
  c.synthetic.dementia_docs = 40;
  c.synthetic.seed = 5;
  c.background_docs = 40;
  c.doc2vec.vec_size = 6;
  c.doc2vec.epochs = 4;
  c.bilm.hidden = 4;
  c.bilm.embedding = 4;
  c.bilm.epochs = 1;
  c.folds = 3;
  c.search_c = {0.1, 1.0, 10.0};
  c.repetitions = 3;
  return c;
}

inline pipeline::Experiment small_experiment(const pipeline::PipelineConfig& c) {
  auto docs = synthetic::to_transcripts(synthetic::generate_synthetic_corpus(c.synthetic));
  auto bg = synthetic::to_transcripts(synthetic::generate_background(c.synthetic, c.background_docs));
  return pipeline::Experiment(c, pipeline::labeled(std::move(docs)), std::move(bg));
}

}  // namespace adscan::testing
