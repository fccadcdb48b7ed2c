#pragma once

#include "sisrfp/error.hpp"
#include "sisrfp/image.hpp"
#include "sisrfp/png_io.hpp"
#include "sisrfp/resample.hpp"
#include "sisrfp/rng.hpp"
#include "sisrfp/stats.hpp"
#include "sisrfp/version.hpp"
#include "sisrfp/nn/architectures.hpp"
#include "sisrfp/nn/checkpoint.hpp"
#include "sisrfp/nn/gemm.hpp"
#include "sisrfp/nn/image_tensor.hpp"
#include "sisrfp/nn/layers.hpp"
#include "sisrfp/nn/loss.hpp"
#include "sisrfp/nn/network.hpp"
#include "sisrfp/nn/optim.hpp"
#include "sisrfp/nn/tensor.hpp"
#include "sisrfp/nn/train.hpp"
#include "sisrfp/zoo/model_spec.hpp"
#include "sisrfp/zoo/sr_train.hpp"
#include "sisrfp/zoo/synthetic.hpp"
#include "sisrfp/zoo/zoo.hpp"
#include "sisrfp/prnu/prnu.hpp"
#include "sisrfp/prnu/seed_eval.hpp"
#include "sisrfp/attribution/attribution.hpp"
#include "sisrfp/attribution/classifier.hpp"
#include "sisrfp/attribution/ratio.hpp"
#include "sisrfp/attribution/triplets.hpp"
#include "sisrfp/attribution/tsne.hpp"
#include "sisrfp/parsing/parsing.hpp"
#include "sisrfp/pipeline/corpus.hpp"
#include "sisrfp/pipeline/dataset.hpp"
#include "sisrfp/pipeline/experiment.hpp"
#include "sisrfp/pipeline/manifest.hpp"
