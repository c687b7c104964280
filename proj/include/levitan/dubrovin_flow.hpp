#pragma once

// Dirichlet divisor dynamics and the trace-formula potential.
//
// Each divisor point is tracked through an angle theta_j with
//   mu_j = c_j - r_j cos(theta_j),  c_j, r_j = center / half width of gap j,
// and sigma_j = +1 iff theta_j mod 2pi lies in [0, pi). In this form the
// Dubrovin system becomes theta_j' = 2 S_j(mu), S_j > 0 smooth, with no
// square-root singularity at the gap edges.

#include <iosfwd>
#include <span>
#include <vector>

#include "levitan/spectral_core.hpp"

namespace levitan {

struct DivisorPoint {
    double mu;
    int sigma;
};

class DirichletDivisor {
public:
    /// Throws Error{InvalidDivisor} unless there is one point per gap, each in
    /// its closed gap, with sigma in {+1, -1}.
    DirichletDivisor(const BandStructure& band, std::vector<DivisorPoint> entries);

    std::span<const DivisorPoint> entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

private:
    std::vector<DivisorPoint> entries_;
};

double mu_from_theta(const BandStructure& band, int j, double theta);
int sigma_from_theta(double theta);
/// Angle in [0, 2pi) representing (mu, sigma) in gap j.
double theta_from_divisor(const BandStructure& band, int j, double mu, int sigma);

/// theta' for every gap (angle form of the Dubrovin system).
void dubrovin_angle_rhs(const BandStructure& band, std::span<const double> theta, std::span<double> dtheta);
/// mu_j' from the raw system with the module's root convention; mus has one entry per gap.
double dubrovin_mu_rhs(const BandStructure& band, int j, std::span<const double> mus, int sigma_j);

class DivisorTrajectory {
public:
    DivisorTrajectory(BandStructure band, DirichletDivisor initial, long first_index, double step,
                      std::vector<double> theta, std::vector<double> dtheta, double tol);

    const BandStructure& band() const { return band_; }
    const DirichletDivisor& initial() const { return initial_; }
    int gap_count() const { return band_.gap_count(); }

    std::size_t size() const { return size_; }
    double step() const { return step_; }
    double x_at(std::size_t i) const { return (first_index_ + static_cast<long>(i)) * step_; }
    double x_min() const { return x_at(0); }
    double x_max() const { return x_at(size_ - 1); }
    bool contains(double x) const;
    double theta_at_node(int j, std::size_t i) const { return theta_[i * gaps_ + (j - 1)]; }

    /// Cubic Hermite interpolation of every angle at x. Throws OutOfRange.
    void thetas(double x, std::span<double> out) const;
    std::vector<double> thetas(double x) const;
    /// Angles at x from a tight local integration starting at the nearest node.
    std::vector<double> precise_thetas(double x) const;

    double theta(int j, double x) const;
    double mu(int j, double x) const;
    int sigma(int j, double x) const;
    std::vector<double> mus(double x) const;
    /// mu_j' at x from the Dubrovin system evaluated at the interpolated state.
    std::vector<double> dmus(double x) const;

    /// Sorted points in (a, b) where mu_j touches an edge of its gap.
    std::vector<double> flip_points(int j, double a, double b) const;
    /// Touch points of the specific edge E_k (k >= 1) in (a, b).
    std::vector<double> edge_touch_points(int k, double a, double b) const;

    /// The same divisor flow seen under x -> -x (theta -> -theta(-x)).
    DivisorTrajectory mirrored() const;

private:
    std::size_t locate(double x) const;

    BandStructure band_;
    DirichletDivisor initial_;
    long first_index_;
    double step_;
    std::size_t size_;
    int gaps_;
    std::vector<double> theta_, dtheta_;
    double tol_;
};

/// Integrates the divisor flow on the grid {k * step} covering [x_min, x_max].
/// Requires x_min <= 0 <= x_max. Throws StepTooLarge when an angle advances more
/// than pi/2 between output nodes and DegenerateGap for a collapsed gap.
DivisorTrajectory integrate_dubrovin(const BandStructure& band, const DirichletDivisor& divisor, double x_min,
                                     double x_max, double step, double tol);

struct PotentialSamples {
    std::vector<double> x;
    std::vector<double> p;
    double trace_constant = 0.0; // E0 + sum (E_{2j-1} + E_{2j})
    double lower_bound = 0.0;
    double upper_bound = 0.0;
};

PotentialSamples trace_potential(const BandStructure& band, const DivisorTrajectory& trajectory);
double potential_at(const DivisorTrajectory& trajectory, double x);
double potential_from_mus(const BandStructure& band, std::span<const double> mus);

struct RecurrenceCandidate {
    double shift;
    double defect;
};

struct RecurrenceReport {
    double slowest_period = 0.0;
    std::vector<RecurrenceCandidate> candidates;
};

/// Shifts tau with sup_x |mu(x + tau) - mu(x)| < tolerance over the overlap. Shifts
/// are scanned on the grid and refined with the interpolant. Informational only.
RecurrenceReport recurrence_diagnostic(const DivisorTrajectory& trajectory, double tolerance);
/// Same scan for raw uniformly sampled channels (no refinement).
RecurrenceReport recurrence_diagnostic(double step, const std::vector<std::vector<double>>& channels,
                                       double tolerance);

/// CSV: x,theta_1..theta_N,mu_1..mu_N,sigma_1..sigma_N,p
void write_trajectory_csv(std::ostream& os, const DivisorTrajectory& trajectory);

} // namespace levitan
