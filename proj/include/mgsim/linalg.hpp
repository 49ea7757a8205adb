#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <stdexcept>
#include <vector>

// Dense linear-algebra kernels, subspace arithmetic, eigenvalue routines,
// pole placement and a fixed-step RK4 integrator shared by all modules.

namespace mgsim {

using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct SynthesisError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct PlacementError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IntegrationError : std::runtime_error {
    IntegrationError(const std::string& what, double time)
        : std::runtime_error(what), t(time) {}
    double t;
};

// Relative singular-value threshold for all rank/kernel decisions.
inline constexpr double kRankTol = 1e-10;

/// Orthonormal basis of a subspace of R^n. An empty basis (0 columns)
/// represents the trivial subspace {0}.
class SubspaceBasis {
  public:
    SubspaceBasis() = default;
    explicit SubspaceBasis(Eigen::Index ambient)
        : basis_(MatrixXd::Zero(ambient, 0)) {}

    // Orthonormalizes the columns of `span` (SVD, relative threshold).
    static SubspaceBasis from_span(const MatrixXd& span);
    // Takes `basis` as-is; throws if columns are not orthonormal to 1e-10.
    static SubspaceBasis from_orthonormal(const MatrixXd& basis);

    Eigen::Index ambient_dim() const { return basis_.rows(); }
    Eigen::Index dim() const { return basis_.cols(); }
    bool empty() const { return basis_.cols() == 0; }
    const MatrixXd& matrix() const { return basis_; }
    Eigen::VectorXd vector(Eigen::Index i) const { return basis_.col(i); }

    // I - B B^T, the projector onto the orthogonal complement.
    MatrixXd complement_projector() const;
    bool contains(const VectorXd& v, double tol = 1e-9) const;
    bool contains(const SubspaceBasis& other, double tol = 1e-9) const;

  private:
    MatrixXd basis_;  // ambient x dim, orthonormal columns
};

/// All eigenvalues of a square matrix, sorted by (real part, imaginary part).
VectorXcd eigenvalues(const MatrixXd& m);

/// Orthonormal basis of ker(m).
SubspaceBasis kernel_basis(const MatrixXd& m);

/// Basis of span(u) + span(v).
SubspaceBasis subspace_sum(const SubspaceBasis& u, const SubspaceBasis& v);

/// Basis of span(u) ∩ span(v).
SubspaceBasis subspace_intersect(const SubspaceBasis& u, const SubspaceBasis& v);

/// Preimage a^{-1}(span s) = ker((I - SS^T) a). Valid for singular a.
SubspaceBasis preimage(const MatrixXd& a, const SubspaceBasis& s);

/// Basis of ∩_k ker(C A^k), the unobservable subspace of (c, a).
SubspaceBasis unobservable_subspace(const MatrixXd& a, const MatrixXd& c);

/// Largest (a, b)-controlled invariant subspace contained in span(k):
/// fixed point of V_0 = K, V_{i+1} = K ∩ a^{-1}(V_i + Im b).
SubspaceBasis max_controlled_invariant(const MatrixXd& a, const MatrixXd& b,
                                       const SubspaceBasis& k);

/// Weakly unobservable subspace of (a, b, c, d): largest V such that some
/// input keeps the trajectory in V with identically zero output.
/// Recursion: V_{i+1} = {x : [a;c] x ∈ (V_i × {0}) + Im [b;d]}.
SubspaceBasis weakly_unobservable(const MatrixXd& a, const MatrixXd& b,
                                  const MatrixXd& c, const MatrixXd& d);

/// Minimum-norm friend Q of the controlled invariant subspace v:
/// (a + b_a Q) span(v) ⊆ span(v). Throws SynthesisError if span(v) is not
/// controlled invariant (least-squares residual above tolerance).
MatrixXd invariant_friend(const MatrixXd& a, const MatrixXd& b_a,
                          const SubspaceBasis& v, double residual_tol = 1e-6);

/// Friend with the dynamics on span(v) shaped toward eigenvalue `rate`
/// wherever the channel's free directions allow it exactly; falls back to
/// the minimum-norm friend per basis vector otherwise.
MatrixXd invariant_friend_shaped(const MatrixXd& a, const MatrixXd& b_a,
                                 const SubspaceBasis& v, double rate,
                                 double residual_tol = 1e-6);

/// Observer gain L with eigenvalues(a - L c) = desired (multiset, 1e-6).
/// Desired spectrum must be closed under conjugation.
MatrixXd place_poles(const MatrixXd& a, const MatrixXd& c,
                     const std::vector<std::complex<double>>& desired);

/// Solves A X - X B = C (Kronecker form; spectra of A and B must be disjoint).
MatrixXd solve_sylvester(const MatrixXd& a, const MatrixXd& b,
                         const MatrixXd& c);

/// Osborne-style diagonal scaling d with balanced D^{-1} A D (power-of-two
/// factors, similarity-exact).
VectorXd balance_scaling(const MatrixXd& m);

/// Solves A^T M + M A = -Q for symmetric M.
MatrixXd solve_lyapunov(const MatrixXd& a, const MatrixXd& q);

/// One classical fourth-order Runge-Kutta step.
/// Throws IntegrationError (carrying t) on non-finite stage values.
VectorXd rk4_step(const std::function<VectorXd(double, const VectorXd&)>& f,
                  const VectorXd& state, double t, double dt);

}  // namespace mgsim
