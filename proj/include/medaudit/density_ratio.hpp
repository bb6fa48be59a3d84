#pragma once

#include "medaudit/classifier.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace medaudit {

struct RatioValue {
    double value = 1.0;  // after clipping to [eps, 1/eps]
    double raw = 1.0;    // before the ratio clip (classifier outputs already clipped)
    bool clipped = false;
};

// r(m, w) = f(m | A=1, w) / f(m | A=0, w) via the odds ratio of two
// classifiers: P(A=1 | M, W) and P(A=1 | W). Joint features are [m..., w...].
class DensityRatioModel {
public:
    DensityRatioModel() = default;
    DensityRatioModel(Classifier joint, Classifier marginal, double clip_epsilon, double probability_clip)
        : joint_(std::move(joint)), marginal_(std::move(marginal)), clip_epsilon_(clip_epsilon),
          probability_clip_(probability_clip) {}

    RatioValue evaluate(std::span<const double> m, std::span<const double> w) const;
    double operator()(std::span<const double> m, std::span<const double> w) const { return evaluate(m, w).value; }

    const Classifier& joint_classifier() const noexcept { return joint_; }
    const Classifier& marginal_classifier() const noexcept { return marginal_; }
    double clip_epsilon() const noexcept { return clip_epsilon_; }
    double probability_clip() const noexcept { return probability_clip_; }

    Json to_json() const;

private:
    Classifier joint_;
    Classifier marginal_;
    double clip_epsilon_ = 0.01;
    double probability_clip_ = 0.01;
};

// Throws InvalidArgument unless 0 < clip_epsilon < 0.5 and rows align.
DensityRatioModel fit_density_ratio(const Eigen::MatrixXd& m, const Eigen::MatrixXd& w, const std::vector<int>& a,
                                    const LearnerSpec& learner, double clip_epsilon,
                                    double probability_clip = 0.01);

}  // namespace medaudit
