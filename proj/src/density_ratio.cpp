#include "medaudit/density_ratio.hpp"

#include "medaudit/error.hpp"

namespace medaudit {

RatioValue DensityRatioModel::evaluate(std::span<const double> m, std::span<const double> w) const {
    std::vector<double> joint_x(m.size() + w.size());
    std::copy(m.begin(), m.end(), joint_x.begin());
    std::copy(w.begin(), w.end(), joint_x.begin() + static_cast<std::ptrdiff_t>(m.size()));
    const double pj = clip_probability(joint_.predict(joint_x), probability_clip_);
    const double pm = clip_probability(marginal_.predict(w), probability_clip_);
    RatioValue out;
    out.raw = (pj / (1 - pj)) / (pm / (1 - pm));
    const double lo = clip_epsilon_, hi = 1.0 / clip_epsilon_;
    out.value = out.raw < lo ? lo : (out.raw > hi ? hi : out.raw);
    out.clipped = out.value != out.raw;
    return out;
}

Json DensityRatioModel::to_json() const {
    Json j;
    j["clip_epsilon"] = clip_epsilon_;
    j["probability_clip"] = probability_clip_;
    j["joint_classifier"] = joint_.to_json();
    j["marginal_classifier"] = marginal_.to_json();
    return j;
}

DensityRatioModel fit_density_ratio(const Eigen::MatrixXd& m, const Eigen::MatrixXd& w, const std::vector<int>& a,
                                    const LearnerSpec& learner, double clip_epsilon, double probability_clip) {
    if (m.rows() != w.rows() || static_cast<Eigen::Index>(a.size()) != m.rows())
        throw Error(ErrorKind::InvalidArgument, "density ratio inputs are not row-aligned");
    if (!(clip_epsilon > 0 && clip_epsilon < 0.5))
        throw Error(ErrorKind::InvalidArgument, "clip_epsilon must lie in (0, 0.5)");
    if (!(probability_clip > 0 && probability_clip < 0.5))
        throw Error(ErrorKind::InvalidArgument, "probability clip must lie in (0, 0.5)");
    Eigen::MatrixXd joint(m.rows(), m.cols() + w.cols());
    joint << m, w;
    return DensityRatioModel(fit_classifier(joint, a, learner), fit_classifier(w, a, learner), clip_epsilon,
                             probability_clip);
}

}  // namespace medaudit
