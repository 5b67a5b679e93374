#include <cmath>
#include <limits>

#include "fieldslab/harness.hpp"

namespace fieldslab {

SampleStats describe(const std::vector<double>& xs) {
    SampleStats s;
    s.n = xs.size();
    if (s.n == 0) return s;
    long double sum = 0.0L;
    for (double x : xs) sum += x;
    const long double mean = sum / s.n;
    s.mean = static_cast<double>(mean);
    if (s.n < 2) return s;
    long double m2 = 0.0L, m3 = 0.0L, m4 = 0.0L;
    for (double x : xs) {
        const long double e = x - mean;
        const long double e2 = e * e;
        m2 += e2;
        m3 += e2 * e;
        m4 += e2 * e2;
    }
    const long double n = s.n;
    m2 /= n;
    m3 /= n;
    m4 /= n;
    s.variance = static_cast<double>(m2 * n / (n - 1));
    s.std_error = std::sqrt(s.variance / s.n);
    // Var(s^2) ~ (mu4 - sigma^4 (n-3)/(n-1)) / n
    const long double vv = (m4 - m2 * m2 * (n - 3) / (n - 1)) / n;
    s.variance_se = static_cast<double>(std::sqrt(std::max(vv, 0.0L)));
    if (m2 > 0.0L) {
        s.skewness = static_cast<double>(m3 / std::pow(m2, 1.5L));
        s.excess_kurtosis = static_cast<double>(m4 / (m2 * m2) - 3.0L);
    }
    return s;
}

double sample_covariance(const std::vector<double>& a, const std::vector<double>& b, double* se) {
    const std::size_t n = a.size();
    if (n != b.size() || n < 2) throw std::invalid_argument("sample_covariance: need two equal samples of size >= 2");
    long double sa = 0.0L, sb = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        sa += a[i];
        sb += b[i];
    }
    const long double ma = sa / n, mb = sb / n;
    std::vector<double> prod(n);
    long double c = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        prod[i] = static_cast<double>((a[i] - ma) * (b[i] - mb));
        c += prod[i];
    }
    const double cov = static_cast<double>(c / (n - 1));
    if (se) *se = describe(prod).std_error;
    return cov;
}

double jarque_bera_pvalue(const SampleStats& s) {
    if (s.n < 2) return std::numeric_limits<double>::quiet_NaN();
    const double jb = s.n / 6.0 * (s.skewness * s.skewness + 0.25 * s.excess_kurtosis * s.excess_kurtosis);
    return std::exp(-0.5 * jb);
}

std::vector<double> batch_means(const std::vector<double>& series, int batches) {
    if (batches < 1 || series.size() < static_cast<std::size_t>(batches))
        throw std::invalid_argument("batch_means: fewer samples than batches");
    const std::size_t len = series.size() / batches;
    std::vector<double> out(batches);
    for (int b = 0; b < batches; ++b) {
        long double s = 0.0L;
        for (std::size_t i = 0; i < len; ++i) s += series[b * len + i];
        out[b] = static_cast<double>(s / len);
    }
    return out;
}

double EstimateRecord::z() const {
    if (!target) return std::numeric_limits<double>::quiet_NaN();
    const double diff = estimate - *target;
    if (std_error == 0.0) return diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
    return diff / std_error;
}

EstimateRecord make_record(std::string name, const std::vector<double>& xs, std::optional<double> target) {
    if (xs.size() < 2) throw std::invalid_argument("make_record: need at least two samples");
    const SampleStats s = describe(xs);
    return {std::move(name), s.mean, s.std_error, s.n, target};
}

}  // namespace fieldslab
