#pragma once

#include "newfluence/common.hpp"

#include <utility>

namespace newfluence {

// Training or test corpus: rows of `features` are the sample vectors x_i.
struct Dataset {
  Matrix features;
  Vector responses;

  Dataset(Matrix features_, Vector responses_)
      : features(std::move(features_)), responses(std::move(responses_)) {
    require(features.rows() >= 1 && features.cols() >= 1,
            "dataset needs at least one sample and one feature");
    require(features.rows() == responses.size(),
            "feature rows and response length must agree");
    require(features.allFinite() && responses.allFinite(), "dataset entries must be finite");
  }

  Index n() const { return features.rows(); }
  Index p() const { return features.cols(); }
};

}  // namespace newfluence
