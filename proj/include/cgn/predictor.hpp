#pragma once

#include "cgn/corpus.hpp"
#include "cgn/tree.hpp"

namespace cgn {

// Anything that maps a code sample to class probabilities: a fitted
// pipeline, or a synthetic model in tests.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual ClassProba predict_proba(const Sample& sample) const = 0;
};

}  // namespace cgn
