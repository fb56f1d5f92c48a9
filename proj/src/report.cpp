#include "thevest/report.hpp"

#include <cmath>
#include <limits>

namespace thevest {

namespace {
double signed_pct(double truth, double est) {
    if (truth == 0.0) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return 100.0 * (truth - est) / truth;
}
}  // namespace

ParamErrors errors_vs_truth(const TheveninParams& truth, const TheveninParams& estimate) {
    ParamErrors e;
    e.v_th_pct = signed_pct(truth.v_th, estimate.v_th);
    e.theta_err_rad = normalize_angle(truth.theta - estimate.theta);
    e.r_th_pct = signed_pct(truth.r_th, estimate.r_th);
    e.x_th_pct = signed_pct(truth.x_th, estimate.x_th);
    return e;
}

}  // namespace thevest
