#include "fpdist/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

namespace fpdist {

double kernel_density(Kernel k, double u) {
    double au = std::abs(u);
    if (au > 1.0) return 0.0;
    switch (k) {
        case Kernel::Epanechnikov:
            return 0.75 * (1.0 - u * u);
        case Kernel::Uniform:
            return 0.5;
        case Kernel::GaussianTruncated: {
            // phi restricted to [-1,1], renormalized to integrate to 1.
            static const double mass = 0.682689492137085897;  // 2*Phi(1)-1
            return normal_pdf(u) / mass;
        }
    }
    return 0.0;
}

Bandwidths Bandwidths::defaults(int n_subjects, double domain_width) {
    if (n_subjects < 1 || domain_width <= 0.0) {
        throw ValidationError("Bandwidths::defaults: need n >= 1 and positive width");
    }
    double n = static_cast<double>(n_subjects);
    double cap = 0.45 * domain_width;
    Bandwidths bw;
    bw.h_mu = std::min(domain_width * std::pow(n, -0.2), cap);
    bw.h_cov = std::min(domain_width * std::pow(n, -1.0 / 6.0), cap);
    bw.h_cross = std::min(domain_width * std::pow(n, -1.0 / 3.0), cap);
    return bw;
}

void Bandwidths::validate(double domain_width) const {
    for (double h : {h_mu, h_cov, h_cross}) {
        if (!(h > 0.0)) throw ValidationError("bandwidths must be strictly positive");
        if (!(h < 0.5 * domain_width)) {
            throw ValidationError("bandwidths must be below half the domain width");
        }
    }
}

double CovarianceSurface::at(double s, double t) const {
    auto [i, u] = interp_locate(grid.points, s);
    auto [j, v] = interp_locate(grid.points, t);
    return (1.0 - u) * ((1.0 - v) * values(i, j) + v * values(i, j + 1)) +
           u * ((1.0 - v) * values(i + 1, j) + v * values(i + 1, j + 1));
}

namespace {

constexpr int kMaxWiden = 3;  // bandwidth doublings before giving up

// ---------------------------------------------------------------------------
// 1-D local-linear core over points aggregated at unique abscissae. Constant
// per-observation weights cancel in the weighted fit, so raw weights are 1.

struct RawPoint1D {
    double t, w, wy;
};

struct Agg1D {
    std::vector<double> t;   // unique, ascending
    std::vector<double> w;   // total weight at t
    std::vector<double> wy;  // total weighted response at t

    void build(std::vector<RawPoint1D> pts) {
        std::sort(pts.begin(), pts.end(),
                  [](const RawPoint1D& a, const RawPoint1D& b) { return a.t < b.t; });
        t.clear();
        w.clear();
        wy.clear();
        for (const auto& p : pts) {
            if (!t.empty() && t.back() == p.t) {
                w.back() += p.w;
                wy.back() += p.wy;
            } else {
                t.push_back(p.t);
                w.push_back(p.w);
                wy.push_back(p.wy);
            }
        }
    }

    int distinct_in(double lo, double hi) const {
        auto b = std::lower_bound(t.begin(), t.end(), lo);
        auto e = std::upper_bound(t.begin(), t.end(), hi);
        return static_cast<int>(e - b);
    }
};

struct Fit1D {
    double intercept = 0.0;
    bool ok = false;
    int widened = 0;
};

// Fits the weighted local line at x; `exclude` lists raw contributions to
// subtract (leave-one-subject-out evaluation).
Fit1D loclin_1d(const Agg1D& agg, double x, double h, Kernel kernel,
                const std::vector<RawPoint1D>* exclude) {
    Fit1D fit;
    for (int attempt = 0; attempt <= kMaxWiden; ++attempt) {
        const double he = h * static_cast<double>(1 << attempt);
        auto lo = std::lower_bound(agg.t.begin(), agg.t.end(), x - he);
        auto hi = std::upper_bound(agg.t.begin(), agg.t.end(), x + he);
        double s0 = 0, s1 = 0, s2 = 0, r0 = 0, r1 = 0;
        int effective = 0;
        for (auto it = lo; it != hi; ++it) {
            int i = static_cast<int>(it - agg.t.begin());
            double k = kernel_density(kernel, (agg.t[i] - x) / he);
            if (k <= 0.0) continue;
            double wk = agg.w[i];
            double wyk = agg.wy[i];
            if (wk <= 0.0) continue;
            ++effective;
            double d = agg.t[i] - x;
            s0 += k * wk;
            s1 += k * wk * d;
            s2 += k * wk * d * d;
            r0 += k * wyk;
            r1 += k * wyk * d;
        }
        if (exclude) {
            for (const auto& p : *exclude) {
                if (std::abs(p.t - x) > he) continue;
                double k = kernel_density(kernel, (p.t - x) / he);
                if (k <= 0.0) continue;
                double d = p.t - x;
                s0 -= k * p.w;
                s1 -= k * p.w * d;
                s2 -= k * p.w * d * d;
                r0 -= k * p.wy;
                r1 -= k * p.wy * d;
                // Location emptied by the exclusion no longer counts.
                auto it = std::lower_bound(agg.t.begin(), agg.t.end(), p.t);
                if (it != agg.t.end() && *it == p.t) {
                    int i = static_cast<int>(it - agg.t.begin());
                    if (agg.w[i] - p.w <= 1e-12 * agg.w[i]) --effective;
                }
            }
        }
        double det = s0 * s2 - s1 * s1;
        double scale = std::max(s0 * s2, s1 * s1);
        if (effective >= 3 && s0 > 0.0 && det > 1e-12 * scale) {
            fit.intercept = (s2 * r0 - s1 * r1) / det;
            fit.ok = std::isfinite(fit.intercept);
            fit.widened = attempt;
            if (fit.ok) return fit;
        }
    }
    fit.ok = false;
    fit.widened = kMaxWiden;
    return fit;
}

// ---------------------------------------------------------------------------
// 2-D local-linear core over unique (u,v) locations in CSR layout: rows are
// unique u values, columns hold ascending v within the row.

struct RawPoint2D {
    double u, v, w, wy;
};

struct Agg2D {
    std::vector<double> u_vals;
    std::vector<int> row_begin;  // size u_vals.size()+1
    std::vector<double> v, w, wy;

    void build(std::vector<RawPoint2D> pts) {
        std::sort(pts.begin(), pts.end(), [](const RawPoint2D& a, const RawPoint2D& b) {
            return a.u != b.u ? a.u < b.u : a.v < b.v;
        });
        u_vals.clear();
        row_begin.clear();
        v.clear();
        w.clear();
        wy.clear();
        for (const auto& p : pts) {
            bool new_row = u_vals.empty() || u_vals.back() != p.u;
            if (new_row) {
                u_vals.push_back(p.u);
                row_begin.push_back(static_cast<int>(v.size()));
                v.push_back(p.v);
                w.push_back(p.w);
                wy.push_back(p.wy);
            } else if (v.back() == p.v) {
                w.back() += p.w;
                wy.back() += p.wy;
            } else {
                v.push_back(p.v);
                w.push_back(p.w);
                wy.push_back(p.wy);
            }
        }
        row_begin.push_back(static_cast<int>(v.size()));
    }
};

struct Fit2D {
    double intercept = 0.0;
    bool ok = false;
    int widened = 0;
};

Fit2D loclin_2d(const Agg2D& agg, double s, double t, double h, Kernel kernel,
                const std::vector<RawPoint2D>* exclude) {
    Fit2D fit;
    for (int attempt = 0; attempt <= kMaxWiden; ++attempt) {
        const double he = h * static_cast<double>(1 << attempt);
        Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
        Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
        int effective = 0;

        auto accumulate = [&](double du, double dv, double k, double wk, double wyk) {
            A(0, 0) += k * wk;
            A(0, 1) += k * wk * du;
            A(0, 2) += k * wk * dv;
            A(1, 1) += k * wk * du * du;
            A(1, 2) += k * wk * du * dv;
            A(2, 2) += k * wk * dv * dv;
            rhs(0) += k * wyk;
            rhs(1) += k * wyk * du;
            rhs(2) += k * wyk * dv;
        };

        auto u_lo = std::lower_bound(agg.u_vals.begin(), agg.u_vals.end(), s - he);
        auto u_hi = std::upper_bound(agg.u_vals.begin(), agg.u_vals.end(), s + he);
        for (auto it = u_lo; it != u_hi; ++it) {
            int r = static_cast<int>(it - agg.u_vals.begin());
            double du = agg.u_vals[r] - s;
            double ku = kernel_density(kernel, du / he);
            if (ku <= 0.0) continue;
            auto v_first = agg.v.begin() + agg.row_begin[r];
            auto v_last = agg.v.begin() + agg.row_begin[r + 1];
            auto c_lo = std::lower_bound(v_first, v_last, t - he);
            auto c_hi = std::upper_bound(v_first, v_last, t + he);
            for (auto cit = c_lo; cit != c_hi; ++cit) {
                int c = static_cast<int>(cit - agg.v.begin());
                double dv = agg.v[c] - t;
                double kv = kernel_density(kernel, dv / he);
                if (kv <= 0.0) continue;
                if (agg.w[c] <= 0.0) continue;
                ++effective;
                accumulate(du, dv, ku * kv, agg.w[c], agg.wy[c]);
            }
        }
        if (exclude) {
            for (const auto& p : *exclude) {
                if (std::abs(p.u - s) > he || std::abs(p.v - t) > he) continue;
                double k = kernel_density(kernel, (p.u - s) / he) *
                           kernel_density(kernel, (p.v - t) / he);
                if (k <= 0.0) continue;
                accumulate(p.u - s, p.v - t, -k, p.w, p.wy);
                --effective;  // conservative: treat the excluded location as gone
            }
        }
        A(1, 0) = A(0, 1);
        A(2, 0) = A(0, 2);
        A(2, 1) = A(1, 2);

        if (effective >= 3 && A(0, 0) > 0.0) {
            Eigen::FullPivLU<Eigen::Matrix3d> lu(A);
            lu.setThreshold(1e-10);
            if (lu.rank() == 3) {
                Eigen::Vector3d coef = lu.solve(rhs);
                if (std::isfinite(coef(0))) {
                    fit.intercept = coef(0);
                    fit.ok = true;
                    fit.widened = attempt;
                    return fit;
                }
            }
        }
    }
    fit.ok = false;
    fit.widened = kMaxWiden;
    return fit;
}

std::string format_t(double t) {
    std::ostringstream os;
    os << t;
    return os.str();
}

Agg1D pooled_observations(const SparseFunctionalDataset& dataset) {
    std::vector<RawPoint1D> pts;
    pts.reserve(dataset.total_obs());
    for (const auto& subj : dataset.subjects) {
        for (size_t j = 0; j < subj.times.size(); ++j) {
            pts.push_back({subj.times[j], 1.0, subj.values[j]});
        }
    }
    Agg1D agg;
    agg.build(std::move(pts));
    return agg;
}

}  // namespace

MeanFunction estimate_mean(const SparseFunctionalDataset& dataset, const Grid& grid,
                           double h_mu, Kernel kernel) {
    dataset.validate();
    grid.validate();
    if (!(h_mu > 0.0)) throw ValidationError("estimate_mean: bandwidth must be positive");
    Agg1D agg = pooled_observations(dataset);
    if (agg.t.size() < 2) {
        throw ValidationError("estimate_mean: need at least 2 distinct observation times");
    }

    MeanFunction mean;
    mean.grid = grid;
    mean.values.resize(grid.size());
    for (int g = 0; g < grid.size(); ++g) {
        Fit1D fit = loclin_1d(agg, grid.points[g], h_mu, kernel, nullptr);
        if (!fit.ok) {
            throw EstimationError("mean smoother: singular window at t=" +
                                  format_t(grid.points[g]) + " even after widening");
        }
        mean.values[g] = fit.intercept;
        if (fit.widened > 0) ++mean.widen_events;
    }
    return mean;
}

namespace {

// Off-diagonal raw covariances (ordered pairs j != l) for subjects with
// n_i >= 2; diagonal raw products come back separately for the sigma^2 step.
struct RawCovariances {
    std::vector<RawPoint2D> off_diagonal;
    std::vector<RawPoint1D> diagonal;
    int usable_subjects = 0;
};

RawCovariances raw_covariances(const SparseFunctionalDataset& dataset,
                               const MeanFunction& mean) {
    RawCovariances raw;
    for (const auto& subj : dataset.subjects) {
        const int m = subj.n_obs();
        std::vector<double> centered(m);
        for (int j = 0; j < m; ++j) {
            centered[j] = subj.values[j] - mean.at(subj.times[j]);
        }
        for (int j = 0; j < m; ++j) {
            raw.diagonal.push_back({subj.times[j], 1.0, centered[j] * centered[j]});
        }
        if (m < 2) continue;
        ++raw.usable_subjects;
        for (int j = 0; j < m; ++j) {
            for (int l = 0; l < m; ++l) {
                if (j == l) continue;
                raw.off_diagonal.push_back(
                    {subj.times[j], subj.times[l], 1.0, centered[j] * centered[l]});
            }
        }
    }
    return raw;
}

}  // namespace

CovarianceSurface estimate_covariance(const SparseFunctionalDataset& dataset,
                                      const MeanFunction& mean, double h_cov,
                                      Kernel kernel) {
    if (!(h_cov > 0.0)) throw ValidationError("estimate_covariance: bandwidth must be positive");
    const Grid& grid = mean.grid;
    RawCovariances raw = raw_covariances(dataset, mean);
    if (raw.usable_subjects == 0) {
        throw ValidationError("estimate_covariance: no subject with n_i >= 2");
    }
    Agg2D agg;
    agg.build(std::move(raw.off_diagonal));

    CovarianceSurface cov;
    cov.grid = grid;
    const int q = grid.size();
    cov.values.resize(q, q);
    // The ordered-pair cloud is symmetric under (u,v) swap, so fitting the
    // upper triangle and mirroring loses nothing.
    for (int i = 0; i < q; ++i) {
        for (int j = i; j < q; ++j) {
            Fit2D fit = loclin_2d(agg, grid.points[i], grid.points[j], h_cov, kernel, nullptr);
            if (!fit.ok) {
                throw EstimationError("covariance smoother: singular window at (s,t)=(" +
                                      format_t(grid.points[i]) + "," +
                                      format_t(grid.points[j]) + ") even after widening");
            }
            cov.values(i, j) = fit.intercept;
            cov.values(j, i) = fit.intercept;
            if (fit.widened > 0) ++cov.widen_events;
        }
    }
    cov.values = 0.5 * (cov.values + cov.values.transpose()).eval();

    // sigma^2: smooth the diagonal raw products and average the excess over
    // the surface diagonal on the middle half of the domain.
    Agg1D diag_agg;
    diag_agg.build(std::move(raw.diagonal));
    const double a = grid.a(), b = grid.b();
    const double lo = a + 0.25 * (b - a), hi = b - 0.25 * (b - a);
    double excess_sum = 0.0;
    int n_interior = 0;
    for (int g = 0; g < q; ++g) {
        double t = grid.points[g];
        if (t < lo || t > hi) continue;
        Fit1D fit = loclin_1d(diag_agg, t, h_cov, kernel, nullptr);
        if (!fit.ok) {
            throw EstimationError("variance smoother: singular window at t=" + format_t(t));
        }
        excess_sum += fit.intercept - cov.values(g, g);
        ++n_interior;
    }
    if (n_interior == 0) {
        throw EstimationError("estimate_covariance: no grid points in the interior half");
    }
    double sigma2 = excess_sum / n_interior;
    cov.sigma2_clipped = sigma2 < 0.0;
    cov.sigma2 = std::max(0.0, sigma2);
    return cov;
}

CrossCovariance estimate_cross_covariance(const SparseFunctionalDataset& dataset,
                                          const MeanFunction& mean, double h_cross,
                                          Kernel kernel) {
    if (!(h_cross > 0.0)) {
        throw ValidationError("estimate_cross_covariance: bandwidth must be positive");
    }
    const Grid& grid = mean.grid;
    std::vector<RawPoint1D> pts;
    int excluded = 0;
    for (const auto& subj : dataset.subjects) {
        auto rit = dataset.responses.find(subj.id);
        if (rit == dataset.responses.end()) {
            ++excluded;
            continue;
        }
        double y = rit->second;
        for (size_t j = 0; j < subj.times.size(); ++j) {
            double centered = subj.values[j] - mean.at(subj.times[j]);
            pts.push_back({subj.times[j], 1.0, centered * y});
        }
    }
    if (pts.empty()) {
        throw ValidationError("estimate_cross_covariance: no subject has a response");
    }
    Agg1D agg;
    agg.build(std::move(pts));

    CrossCovariance cross;
    cross.grid = grid;
    cross.excluded_subjects = excluded;
    cross.values.resize(grid.size());
    for (int g = 0; g < grid.size(); ++g) {
        Fit1D fit = loclin_1d(agg, grid.points[g], h_cross, kernel, nullptr);
        if (!fit.ok) {
            throw EstimationError("cross-covariance smoother: singular window at t=" +
                                  format_t(grid.points[g]) + " even after widening");
        }
        cross.values[g] = fit.intercept;
        if (fit.widened > 0) ++cross.widen_events;
    }
    return cross;
}

namespace {

double cv_score_mean(const SparseFunctionalDataset& dataset, double h, Kernel kernel) {
    Agg1D agg = pooled_observations(dataset);
    double score = 0.0;
    for (const auto& subj : dataset.subjects) {
        std::vector<RawPoint1D> mine;
        mine.reserve(subj.times.size());
        for (size_t j = 0; j < subj.times.size(); ++j) {
            mine.push_back({subj.times[j], 1.0, subj.values[j]});
        }
        for (size_t j = 0; j < subj.times.size(); ++j) {
            Fit1D fit = loclin_1d(agg, subj.times[j], h, kernel, &mine);
            if (!fit.ok) return std::numeric_limits<double>::infinity();
            double r = subj.values[j] - fit.intercept;
            score += r * r;
        }
    }
    return score;
}

double cv_score_covariance(const SparseFunctionalDataset& dataset, const MeanFunction& mean,
                           double h, Kernel kernel) {
    RawCovariances raw = raw_covariances(dataset, mean);
    Agg2D agg;
    agg.build(raw.off_diagonal);  // keep raw list for per-subject targets
    double score = 0.0;
    size_t cursor = 0;
    for (const auto& subj : dataset.subjects) {
        const int m = subj.n_obs();
        if (m < 2) continue;
        const size_t n_pairs = static_cast<size_t>(m) * (m - 1);
        std::vector<RawPoint2D> mine(raw.off_diagonal.begin() + cursor,
                                     raw.off_diagonal.begin() + cursor + n_pairs);
        for (const auto& p : mine) {
            Fit2D fit = loclin_2d(agg, p.u, p.v, h, kernel, &mine);
            if (!fit.ok) return std::numeric_limits<double>::infinity();
            double r = p.wy - fit.intercept;
            score += r * r;
        }
        cursor += n_pairs;
    }
    return score;
}

double cv_score_cross(const SparseFunctionalDataset& dataset, const MeanFunction& mean,
                      double h, Kernel kernel) {
    std::vector<RawPoint1D> pts;
    std::vector<std::pair<size_t, size_t>> subject_span;  // [begin,end) into pts
    for (const auto& subj : dataset.subjects) {
        auto rit = dataset.responses.find(subj.id);
        if (rit == dataset.responses.end()) continue;
        size_t begin = pts.size();
        for (size_t j = 0; j < subj.times.size(); ++j) {
            double centered = subj.values[j] - mean.at(subj.times[j]);
            pts.push_back({subj.times[j], 1.0, centered * rit->second});
        }
        subject_span.emplace_back(begin, pts.size());
    }
    if (pts.empty()) {
        throw ValidationError("select_bandwidth_cv: no subject has a response");
    }
    Agg1D agg;
    agg.build(pts);
    double score = 0.0;
    for (auto [begin, end] : subject_span) {
        std::vector<RawPoint1D> mine(pts.begin() + begin, pts.begin() + end);
        for (const auto& p : mine) {
            Fit1D fit = loclin_1d(agg, p.t, h, kernel, &mine);
            if (!fit.ok) return std::numeric_limits<double>::infinity();
            double r = p.wy - fit.intercept;
            score += r * r;
        }
    }
    return score;
}

}  // namespace

double select_bandwidth_cv(const SparseFunctionalDataset& dataset, const Grid& grid,
                           const std::vector<double>& candidates, CvTarget target,
                           Kernel kernel) {
    if (candidates.empty()) throw ValidationError("select_bandwidth_cv: no candidates");
    for (double h : candidates) {
        if (!(h > 0.0)) throw ValidationError("select_bandwidth_cv: candidates must be positive");
    }
    if (candidates.size() == 1) return candidates.front();
    if (dataset.n_subjects() < 10) {
        throw ValidationError("select_bandwidth_cv: need at least 10 subjects");
    }

    // The covariance and cross targets need a mean estimate; the default
    // mean bandwidth is held fixed across candidates.
    MeanFunction mean;
    if (target != CvTarget::Mean) {
        double h_mu = Bandwidths::defaults(dataset.n_subjects(), grid.width()).h_mu;
        mean = estimate_mean(dataset, grid, h_mu, kernel);
    }

    std::vector<double> sorted(candidates);
    std::sort(sorted.begin(), sorted.end());
    double best_h = 0.0;
    double best_score = std::numeric_limits<double>::infinity();
    for (double h : sorted) {
        double score;
        switch (target) {
            case CvTarget::Mean:
                score = cv_score_mean(dataset, h, kernel);
                break;
            case CvTarget::Covariance:
                score = cv_score_covariance(dataset, mean, h, kernel);
                break;
            case CvTarget::Cross:
                score = cv_score_cross(dataset, mean, h, kernel);
                break;
        }
        if (score < best_score) {  // strict: ties keep the smaller bandwidth
            best_score = score;
            best_h = h;
        }
    }
    if (!std::isfinite(best_score)) {
        throw EstimationError("select_bandwidth_cv: all candidates degenerate");
    }
    return best_h;
}

}  // namespace fpdist
