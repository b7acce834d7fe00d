#pragma once

// Observation-model estimation from labeled alert traces: univariate
// Gaussian-mixture EM per state and discretization onto {0..n-1}.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "stopgame/game.hpp"

namespace stopgame {

inline constexpr double kVarianceFloor = 1e-6;

struct GaussianComponent {
    double weight = 1.0;
    double mean = 0.0;
    double variance = 1.0;
};

struct GmmFit {
    std::vector<GaussianComponent> components;
    std::vector<double> log_likelihood;  // per iteration, evaluated before each M-step
    int iterations = 0;
    bool variance_floored = false;
};

struct EmOptions {
    int max_iters = 500;
    double tol = 1e-8;  // stop when the log-likelihood gain falls below this
};

class ParseError : public std::runtime_error {
public:
    ParseError(int line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

namespace detail {

inline double log_normal_pdf(double x, double mean, double var) {
    constexpr double kLog2Pi = 1.8378770664093453;
    const double d = x - mean;
    return -0.5 * (kLog2Pi + std::log(var) + d * d / var);
}

inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const size_t lo = static_cast<size_t>(std::floor(pos));
    const size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace detail

inline double gmm_log_likelihood(const std::vector<double>& samples, const std::vector<GaussianComponent>& comps) {
    double ll = 0.0;
    std::vector<double> lp(comps.size());
    for (double x : samples) {
        double mx = -std::numeric_limits<double>::infinity();
        for (size_t c = 0; c < comps.size(); ++c) {
            lp[c] = std::log(comps[c].weight) + detail::log_normal_pdf(x, comps[c].mean, comps[c].variance);
            mx = std::max(mx, lp[c]);
        }
        double s = 0.0;
        for (double v : lp) s += std::exp(v - mx);
        ll += mx + std::log(s);
    }
    return ll;
}

/// EM for a k-component univariate mixture. Means start at evenly spaced
/// sample quantiles, variances at the sample variance, weights uniform.
inline GmmFit em_fit(const std::vector<double>& samples, int k, const EmOptions& opt = {}) {
    if (k < 1) throw DomainError("em_fit: k must be at least 1");
    if (static_cast<int>(samples.size()) < k) throw DomainError("em_fit: fewer samples than components");
    const size_t n = samples.size();
    const size_t kk = static_cast<size_t>(k);

    std::vector<double> sorted(samples);
    std::sort(sorted.begin(), sorted.end());
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double x : samples) var += (x - mean) * (x - mean);
    var = std::max(var / static_cast<double>(n), kVarianceFloor);

    GmmFit fit;
    fit.components.resize(kk);
    for (size_t c = 0; c < kk; ++c)
        fit.components[c] = {1.0 / k, detail::quantile_sorted(sorted, (c + 0.5) / k), var};

    std::vector<double> resp(n * kk);
    std::vector<double> lp(kk);
    for (int it = 0; it < opt.max_iters; ++it) {
        // E-step.
        double ll = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double mx = -std::numeric_limits<double>::infinity();
            for (size_t c = 0; c < kk; ++c) {
                const auto& g = fit.components[c];
                lp[c] = std::log(g.weight) + detail::log_normal_pdf(samples[i], g.mean, g.variance);
                mx = std::max(mx, lp[c]);
            }
            double s = 0.0;
            for (size_t c = 0; c < kk; ++c) s += (lp[c] = std::exp(lp[c] - mx));
            for (size_t c = 0; c < kk; ++c) resp[i * kk + c] = lp[c] / s;
            ll += mx + std::log(s);
        }
        fit.log_likelihood.push_back(ll);
        fit.iterations = it + 1;
        if (it > 0 && ll - fit.log_likelihood[fit.log_likelihood.size() - 2] < opt.tol) break;

        // M-step.
        for (size_t c = 0; c < kk; ++c) {
            double nk = 0.0, sx = 0.0;
            for (size_t i = 0; i < n; ++i) {
                nk += resp[i * kk + c];
                sx += resp[i * kk + c] * samples[i];
            }
            if (nk <= 0.0) continue;  // empty component keeps its parameters
            const double mu = sx / nk;
            double sv = 0.0;
            for (size_t i = 0; i < n; ++i) sv += resp[i * kk + c] * (samples[i] - mu) * (samples[i] - mu);
            double v = sv / nk;
            if (v < kVarianceFloor) {
                v = kVarianceFloor;
                fit.variance_floored = true;
            }
            fit.components[c] = {nk / static_cast<double>(n), mu, v};
        }
    }
    return fit;
}

/// Mixture mass on unit bins [o, o+1); bin 0 also takes the mass below 0 and
/// bin n-1 everything from n-1 upward. Floored and renormalized.
inline std::vector<double> discretize(const std::vector<GaussianComponent>& comps, int n, double floor = kPmfFloor) {
    if (n < 2) throw DomainError("discretize: alphabet size must be at least 2");
    std::vector<double> pmf(static_cast<size_t>(n), 0.0);
    for (const auto& g : comps) {
        const double sd = std::sqrt(g.variance);
        double prev = 0.0;  // CDF at -infinity
        for (int o = 0; o < n; ++o) {
            const double cdf = o == n - 1 ? 1.0 : detail::normal_cdf((o + 1 - g.mean) / sd);
            pmf[static_cast<size_t>(o)] += g.weight * (cdf - prev);
            prev = cdf;
        }
    }
    for (double& p : pmf) p = std::max(p, floor);
    const double total = std::accumulate(pmf.begin(), pmf.end(), 0.0);
    for (double& p : pmf) p /= total;
    return pmf;
}

struct TraceRow {
    int state = 0;
    double observation = 0.0;
};

struct TraceDataset {
    std::vector<double> samples0;
    std::vector<double> samples1;
    std::vector<TraceRow> rows;  // file order, for re-export
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <class T>
bool parse_number(const std::string& field, T& out) {
    const std::string t = trim(field);
    if (t.empty()) return false;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), out);
    return res.ec == std::errc() && res.ptr == t.data() + t.size();
}

}  // namespace detail

inline TraceDataset parse_trace(std::istream& in) {
    TraceDataset ds;
    std::string line;
    int lineno = 0;
    if (!std::getline(in, line)) throw ParseError(1, "empty trace file");
    ++lineno;
    if (detail::trim(line) != "state,observation") throw ParseError(1, "expected header 'state,observation'");
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
            throw ParseError(lineno, "expected two comma-separated fields");
        TraceRow row;
        if (!detail::parse_number(line.substr(0, comma), row.state) || (row.state != 0 && row.state != 1))
            throw ParseError(lineno, "state must be 0 or 1");
        if (!detail::parse_number(line.substr(comma + 1), row.observation) || !(row.observation >= 0.0) ||
            !std::isfinite(row.observation))
            throw ParseError(lineno, "observation must be a nonnegative real");
        (row.state == 0 ? ds.samples0 : ds.samples1).push_back(row.observation);
        ds.rows.push_back(row);
    }
    return ds;
}

inline TraceDataset ingest_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trace file '" + path + "'");
    return parse_trace(in);
}

inline void write_trace(std::ostream& os, const TraceDataset& ds) {
    os << "state,observation\n";
    for (const auto& r : ds.rows) os << r.state << ',' << format_double(r.observation) << '\n';
}

struct FittedObservationModel {
    ObservationModel model;
    GmmFit fit0;
    GmmFit fit1;
};

/// Fits both state slices and discretizes them onto an n-symbol alphabet.
inline FittedObservationModel fit_observation_model(const TraceDataset& ds, int k0, int k1, int n,
                                                    const EmOptions& opt = {}) {
    if (ds.samples0.empty() || ds.samples1.empty())
        throw DomainError("fit_observation_model: both states need at least one sample");
    FittedObservationModel out;
    out.fit0 = em_fit(ds.samples0, k0, opt);
    out.fit1 = em_fit(ds.samples1, k1, opt);
    out.model = ObservationModel{discretize(out.fit0.components, n), discretize(out.fit1.components, n)};
    return out;
}

}  // namespace stopgame
