#pragma once

// Friendly adversarial data augmentation and geometry-aware adversarial
// training for small text classifiers: corpus handling, a differentiable
// mean-pool classifier with analytic gradients, gradient-based inner
// maximization, greedy word-substitution attacks, friendly augmentation,
// training modes and the robustness metric suite.

#include "fadv/attack.hpp"
#include "fadv/cli.hpp"
#include "fadv/common.hpp"
#include "fadv/corpus.hpp"
#include "fadv/embedding.hpp"
#include "fadv/evaluation.hpp"
#include "fadv/fada.hpp"
#include "fadv/innermax.hpp"
#include "fadv/model.hpp"
#include "fadv/reports.hpp"
#include "fadv/synthetic.hpp"
#include "fadv/training.hpp"
