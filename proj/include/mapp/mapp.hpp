#pragma once

// Umbrella header for the whole toolkit.

#include "mapp/archive.hpp"
#include "mapp/dataset.hpp"
#include "mapp/encoder.hpp"
#include "mapp/errors.hpp"
#include "mapp/eval.hpp"
#include "mapp/experiments.hpp"
#include "mapp/geometry.hpp"
#include "mapp/induction.hpp"
#include "mapp/matrix.hpp"
#include "mapp/mlm.hpp"
#include "mapp/model.hpp"
#include "mapp/optim.hpp"
#include "mapp/pseudoword_store.hpp"
#include "mapp/rng.hpp"
#include "mapp/svg.hpp"
#include "mapp/tokenizer.hpp"
#include "mapp/toy_corpus.hpp"
#include "mapp/train.hpp"
