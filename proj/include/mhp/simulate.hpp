#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mhp/errors.hpp"
#include "mhp/rng.hpp"
#include "mhp/sequence.hpp"
#include "mhp/tensor.hpp"

namespace mhp {

/// Ground-truth parameters of a multivariate exponential Hawkes process,
///   lambda_r(t) = mu_r + sum_{t_i < t} alpha_{r_i r} exp(-beta_{r_i r} (t - t_i)).
/// alpha is indexed (source, target); construction enforces stationarity.
struct HawkesGroundTruth {
    Tensor mu;     // 1 x R
    Tensor alpha;  // R x R, alpha(q, r) = jump on type r caused by a type-q event
    Tensor beta;   // R x R, matching decay rates

    int num_types() const { return mu.cols; }

    static HawkesGroundTruth univariate(double mu, double alpha, double beta) {
        HawkesGroundTruth t;
        t.mu = Tensor::full(1, 1, mu);
        t.alpha = Tensor::full(1, 1, alpha);
        t.beta = Tensor::full(1, 1, beta);
        t.check();
        return t;
    }

    void check() const {
        int R = mu.cols;
        if (mu.rows != 1 || alpha.rows != R || alpha.cols != R || beta.rows != R || beta.cols != R)
            throw DataError("HawkesGroundTruth: inconsistent shapes");
        for (double m : mu.data)
            if (!(m > 0.0)) throw DataError("HawkesGroundTruth: base rates must be positive");
        for (double a : alpha.data)
            if (!(a >= 0.0)) throw DataError("HawkesGroundTruth: excitation amplitudes must be >= 0");
        for (double b : beta.data)
            if (!(b > 0.0)) throw DataError("HawkesGroundTruth: decay rates must be positive");
        double rho = branching_spectral_radius();
        if (!(rho < 1.0))
            throw NumericalError("HawkesGroundTruth: non-stationary (spectral radius " +
                                 std::to_string(rho) + " >= 1)");
    }

    /// Spectral radius of the branching matrix [alpha_{qr}/beta_{qr}]. The
    /// matrix is nonnegative, so power iteration converges to the Perron root.
    double branching_spectral_radius() const {
        int R = mu.cols;
        Tensor m(R, R);
        for (int q = 0; q < R; ++q)
            for (int r = 0; r < R; ++r) m(q, r) = alpha(q, r) / beta(q, r);
        std::vector<double> v(R, 1.0);
        double lambda = 0.0;
        for (int it = 0; it < 200; ++it) {
            std::vector<double> w(R, 0.0);
            for (int q = 0; q < R; ++q)
                for (int r = 0; r < R; ++r) w[q] += m(q, r) * v[r];
            double norm = 0.0;
            for (double x : w) norm = std::max(norm, std::abs(x));
            if (norm == 0.0) return 0.0;
            for (double& x : w) x /= norm;
            lambda = norm;
            v = std::move(w);
        }
        return lambda;
    }
};

/// Homogeneous Poisson realization on [0, horizon] with total rate `rate` and
/// marks uniform over num_types. Pure function of (parameters, seed).
inline EventSequence simulate_poisson(double rate, double horizon, int num_types,
                                      std::uint64_t seed, const std::string& id = "poisson") {
    if (!(rate > 0.0)) throw UsageError("simulate_poisson: rate must be positive");
    if (!(horizon > 0.0)) throw UsageError("simulate_poisson: horizon must be positive");
    if (num_types < 1) throw UsageError("simulate_poisson: num_types must be >= 1");
    Rng rng(seed);
    EventSequence seq;
    seq.id = id;
    seq.num_types = num_types;
    double t = 0.0;
    while (true) {
        t += rng.exponential(rate);
        if (t > horizon) break;
        int r = num_types == 1 ? 0 : static_cast<int>(rng.uniform_int(num_types));
        seq.events.push_back(Event{t, r});
    }
    return seq;
}

namespace detail {
// Decayed excitation state: excite(q, r) = sum over past type-q events of
// alpha_{qr} exp(-beta_{qr} (t - t_i)), kept current at time `t`.
struct HawkesState {
    const HawkesGroundTruth& truth;
    Tensor excite;
    double t = 0.0;

    explicit HawkesState(const HawkesGroundTruth& gt)
        : truth(gt), excite(gt.num_types(), gt.num_types()) {}

    void advance_to(double s) {
        int R = truth.num_types();
        for (int q = 0; q < R; ++q)
            for (int r = 0; r < R; ++r) excite(q, r) *= std::exp(-truth.beta(q, r) * (s - t));
        t = s;
    }
    void add_event(int q) {
        int R = truth.num_types();
        for (int r = 0; r < R; ++r) excite(q, r) += truth.alpha(q, r);
    }
    double intensity(int r) const {
        double lam = truth.mu.data[r];
        for (int q = 0; q < truth.num_types(); ++q) lam += excite(q, r);
        return lam;
    }
    double total_intensity() const {
        double lam = 0.0;
        for (int r = 0; r < truth.num_types(); ++r) lam += intensity(r);
        return lam;
    }
};
}  // namespace detail

/// Ogata thinning for the multivariate exponential Hawkes process. All kernels
/// decay monotonically, so the total intensity evaluated at the current time
/// dominates the intensity until the next event and is a valid bound; it is
/// refreshed after every accepted event and tightened after rejections.
inline EventSequence simulate_hawkes_thinning(const HawkesGroundTruth& truth, double horizon,
                                              std::uint64_t seed,
                                              const std::string& id = "hawkes") {
    if (!(horizon > 0.0)) throw UsageError("simulate_hawkes_thinning: horizon must be positive");
    truth.check();

    Rng rng(seed);
    detail::HawkesState state(truth);
    EventSequence seq;
    seq.id = id;
    seq.num_types = truth.num_types();

    double t = 0.0;
    while (true) {
        double bound = state.total_intensity();
        double w = rng.exponential(bound);
        double cand = t + w;
        if (cand > horizon) break;
        state.advance_to(cand);
        t = cand;
        double lam = state.total_intensity();
        if (rng.uniform01() * bound <= lam) {
            // accepted: pick the mark proportionally to per-type intensities
            double u = rng.uniform01() * lam;
            int r = 0;
            double acc = state.intensity(0);
            while (r + 1 < seq.num_types && u > acc) {
                ++r;
                acc += state.intensity(r);
            }
            state.add_event(r);
            seq.events.push_back(Event{t, r});
        }
    }
    return seq;
}

/// Integrated ground-truth intensity over [0, t] for a simulated sequence;
/// closed form for the exponential kernel:
///   Lambda(t) = sum_r mu_r t + sum_i sum_r (alpha_{r_i r}/beta_{r_i r}) (1 - e^{-beta_{r_i r}(t - t_i)}).
/// Used by the time-rescaling oracle: successive differences at event times
/// are iid Exp(1) when the sequence follows `truth`.
inline double ground_truth_compensator(const HawkesGroundTruth& truth, const EventSequence& seq,
                                       double t) {
    int R = truth.num_types();
    double lam = 0.0;
    for (int r = 0; r < R; ++r) lam += truth.mu.data[r] * t;
    for (const Event& e : seq.events) {
        if (e.time >= t) break;
        for (int r = 0; r < R; ++r) {
            double a = truth.alpha(e.type, r);
            double b = truth.beta(e.type, r);
            lam += a / b * (1.0 - std::exp(-b * (t - e.time)));
        }
    }
    return lam;
}

}  // namespace mhp
