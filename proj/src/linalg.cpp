#include "mgsim/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace mgsim {

namespace {

void require_finite(const MatrixXd& m, const char* who) {
    if (!m.allFinite()) throw DimensionError(std::string(who) + ": non-finite entries");
}

bool complex_less(const std::complex<double>& a, const std::complex<double>& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
}

}  // namespace

SubspaceBasis SubspaceBasis::from_span(const MatrixXd& span) {
    require_finite(span, "SubspaceBasis::from_span");
    SubspaceBasis out(span.rows());
    if (span.cols() == 0) return out;
    Eigen::JacobiSVD<MatrixXd> svd(span, Eigen::ComputeFullU);
    const auto& sv = svd.singularValues();
    double cutoff = sv.size() > 0 ? kRankTol * sv(0) : 0.0;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cutoff) ++rank;
    out.basis_ = svd.matrixU().leftCols(rank);
    return out;
}

SubspaceBasis SubspaceBasis::from_orthonormal(const MatrixXd& basis) {
    require_finite(basis, "SubspaceBasis::from_orthonormal");
    if (basis.cols() > basis.rows())
        throw DimensionError("SubspaceBasis: more vectors than ambient dimension");
    MatrixXd gram = basis.transpose() * basis;
    if (!(gram - MatrixXd::Identity(basis.cols(), basis.cols())).isZero(1e-10))
        throw DimensionError("SubspaceBasis: columns not orthonormal");
    SubspaceBasis out(basis.rows());
    out.basis_ = basis;
    return out;
}

MatrixXd SubspaceBasis::complement_projector() const {
    Eigen::Index n = ambient_dim();
    return MatrixXd::Identity(n, n) - basis_ * basis_.transpose();
}

bool SubspaceBasis::contains(const VectorXd& v, double tol) const {
    double nv = v.norm();
    if (nv == 0.0) return true;
    return (v - basis_ * (basis_.transpose() * v)).norm() <= tol * std::max(1.0, nv);
}

bool SubspaceBasis::contains(const SubspaceBasis& other, double tol) const {
    for (Eigen::Index i = 0; i < other.dim(); ++i)
        if (!contains(other.vector(i), tol)) return false;
    return true;
}

VectorXcd eigenvalues(const MatrixXd& m) {
    if (m.rows() != m.cols()) throw DimensionError("eigenvalues: matrix not square");
    require_finite(m, "eigenvalues");
    if (m.rows() == 0) return VectorXcd(0);
    Eigen::EigenSolver<MatrixXd> es(m, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("eigenvalues: QR iteration failed to converge");
    VectorXcd vals = es.eigenvalues();
    std::vector<std::complex<double>> v(vals.data(), vals.data() + vals.size());
    std::sort(v.begin(), v.end(), complex_less);
    for (Eigen::Index i = 0; i < vals.size(); ++i) vals(i) = v[i];
    return vals;
}

namespace {

// `scale` guards matrices that are products with near-zero projectors, where
// the largest singular value itself is roundoff noise and a purely relative
// cutoff would see full rank.
SubspaceBasis kernel_with_scale(const MatrixXd& m, double scale) {
    require_finite(m, "kernel_basis");
    Eigen::Index n = m.cols();
    if (m.rows() == 0 || n == 0)
        return SubspaceBasis::from_orthonormal(MatrixXd::Identity(n, n));
    Eigen::JacobiSVD<MatrixXd> svd(m, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    double cutoff = kRankTol * std::max(sv.size() > 0 ? sv(0) : 0.0, scale);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cutoff) ++rank;
    SubspaceBasis out(n);
    if (rank < n) out = SubspaceBasis::from_orthonormal(svd.matrixV().rightCols(n - rank));
    return out;
}

}  // namespace

SubspaceBasis kernel_basis(const MatrixXd& m) { return kernel_with_scale(m, 0.0); }

SubspaceBasis subspace_sum(const SubspaceBasis& u, const SubspaceBasis& v) {
    if (u.ambient_dim() != v.ambient_dim())
        throw DimensionError("subspace_sum: ambient dimension mismatch");
    MatrixXd joint(u.ambient_dim(), u.dim() + v.dim());
    joint << u.matrix(), v.matrix();
    return SubspaceBasis::from_span(joint);
}

SubspaceBasis subspace_intersect(const SubspaceBasis& u, const SubspaceBasis& v) {
    if (u.ambient_dim() != v.ambient_dim())
        throw DimensionError("subspace_intersect: ambient dimension mismatch");
    Eigen::Index n = u.ambient_dim();
    // x in both spans  <=>  both complement projectors annihilate x.
    MatrixXd stacked(2 * n, n);
    stacked << u.complement_projector(), v.complement_projector();
    return kernel_with_scale(stacked, 1.0);
}

SubspaceBasis preimage(const MatrixXd& a, const SubspaceBasis& s) {
    if (a.rows() != s.ambient_dim())
        throw DimensionError("preimage: map range does not match subspace ambient");
    double scale = a.size() > 0 ? a.cwiseAbs().maxCoeff() : 0.0;
    return kernel_with_scale(s.complement_projector() * a, scale);
}

SubspaceBasis unobservable_subspace(const MatrixXd& a, const MatrixXd& c) {
    if (a.rows() != a.cols()) throw DimensionError("unobservable_subspace: A not square");
    if (c.cols() != a.cols())
        throw DimensionError("unobservable_subspace: C column count mismatch");
    Eigen::Index n = a.rows();
    MatrixXd obs(c.rows() * n, n);
    MatrixXd block = c;
    for (Eigen::Index k = 0; k < n; ++k) {
        obs.middleRows(k * c.rows(), c.rows()) = block;
        block = block * a;
    }
    return kernel_basis(obs);
}

SubspaceBasis max_controlled_invariant(const MatrixXd& a, const MatrixXd& b,
                                       const SubspaceBasis& k) {
    if (a.rows() != a.cols()) throw DimensionError("max_controlled_invariant: A not square");
    if (b.rows() != a.rows()) throw DimensionError("max_controlled_invariant: B row mismatch");
    if (k.ambient_dim() != a.rows())
        throw DimensionError("max_controlled_invariant: K ambient mismatch");
    SubspaceBasis im_b = SubspaceBasis::from_span(b);
    SubspaceBasis v = k;
    for (Eigen::Index it = 0; it <= a.rows(); ++it) {
        SubspaceBasis next = subspace_intersect(k, preimage(a, subspace_sum(v, im_b)));
        if (next.dim() == v.dim()) return next;
        v = next;
    }
    return v;
}

SubspaceBasis weakly_unobservable(const MatrixXd& a, const MatrixXd& b,
                                  const MatrixXd& c, const MatrixXd& d) {
    Eigen::Index n = a.rows(), p = c.rows(), m = b.cols();
    if (a.cols() != n || c.cols() != n || d.rows() != p || d.cols() != m)
        throw DimensionError("weakly_unobservable: inconsistent dimensions");
    MatrixXd t(n + p, n);
    t << a, c;
    MatrixXd s(n + p, m);
    s << b, d;
    SubspaceBasis im_s = SubspaceBasis::from_span(s);
    SubspaceBasis v = SubspaceBasis::from_orthonormal(MatrixXd::Identity(n, n));
    for (Eigen::Index it = 0; it <= n; ++it) {
        // Embed V x {0} into R^{n+p}.
        MatrixXd embedded = MatrixXd::Zero(n + p, v.dim());
        embedded.topRows(n) = v.matrix();
        SubspaceBasis target = subspace_sum(SubspaceBasis::from_span(embedded), im_s);
        SubspaceBasis next = preimage(t, target);
        if (next.dim() == v.dim()) return next;
        v = next;
    }
    return v;
}

namespace {

// Least-squares channel correction for one basis vector: finds q minimizing
// ||A w + B q - (span V component)||, i.e. solves [V, B][c; -q] = A w.
struct FriendSolve {
    VectorXd q;
    double residual;
};

FriendSolve friend_for_vector(const MatrixXd& a, const MatrixXd& b_a,
                              const SubspaceBasis& v, const VectorXd& w) {
    MatrixXd lhs(a.rows(), v.dim() + b_a.cols());
    lhs << v.matrix(), b_a;
    VectorXd rhs = a * w;
    VectorXd sol = lhs.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(rhs);
    FriendSolve out;
    out.q = -sol.tail(b_a.cols());
    out.residual = (lhs * sol - rhs).norm();
    return out;
}

}  // namespace

MatrixXd invariant_friend(const MatrixXd& a, const MatrixXd& b_a,
                          const SubspaceBasis& v, double residual_tol) {
    if (v.empty()) throw SynthesisError("invariant_friend: empty subspace");
    if (a.rows() != a.cols() || b_a.rows() != a.rows() || v.ambient_dim() != a.rows())
        throw DimensionError("invariant_friend: inconsistent dimensions");
    MatrixXd psi(b_a.cols(), v.dim());
    for (Eigen::Index j = 0; j < v.dim(); ++j) {
        VectorXd w = v.vector(j);
        FriendSolve fs = friend_for_vector(a, b_a, v, w);
        if (fs.residual > residual_tol * std::max(1.0, (a * w).norm()))
            throw SynthesisError("invariant_friend: subspace is not controlled invariant");
        psi.col(j) = fs.q;
    }
    return psi * v.matrix().transpose();
}

MatrixXd invariant_friend_shaped(const MatrixXd& a, const MatrixXd& b_a,
                                 const SubspaceBasis& v, double rate,
                                 double residual_tol) {
    MatrixXd q0 = invariant_friend(a, b_a, v, residual_tol);
    // Directions whose B_a-image stays inside span(v) are free to reshape
    // the induced dynamics without breaking invariance.
    double b_scale = b_a.size() > 0 ? b_a.cwiseAbs().maxCoeff() : 0.0;
    SubspaceBasis free_dirs = kernel_with_scale(v.complement_projector() * b_a, b_scale);
    if (free_dirs.empty()) return q0;
    MatrixXd psi(b_a.cols(), v.dim());
    for (Eigen::Index j = 0; j < v.dim(); ++j) {
        VectorXd w = v.vector(j);
        VectorXd qj = q0 * w;
        VectorXd want = rate * w - (a * w + b_a * qj);
        // min ||B_a n - want|| over n in the free space.
        MatrixXd bn = b_a * free_dirs.matrix();
        VectorXd coeff = bn.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(want);
        if ((bn * coeff - want).norm() <= 1e-8 * std::max(1.0, want.norm()))
            qj += free_dirs.matrix() * coeff;
        psi.col(j) = qj;
    }
    return psi * v.matrix().transpose();
}

namespace {

// Real block form of a conjugation-closed spectrum: 2x2 rotation blocks for
// complex pairs, Jordan chains for repeated values.
MatrixXd real_spectrum_matrix(std::vector<std::complex<double>> desired) {
    std::sort(desired.begin(), desired.end(), complex_less);
    Eigen::Index n = static_cast<Eigen::Index>(desired.size());
    MatrixXd lam = MatrixXd::Zero(n, n);
    std::vector<bool> used(desired.size(), false);
    Eigen::Index pos = 0;
    for (size_t i = 0; i < desired.size(); ++i) {
        if (used[i]) continue;
        const auto li = desired[i];
        if (std::abs(li.imag()) < 1e-12) {
            // Collect the whole real run into one Jordan chain.
            std::vector<size_t> chain{i};
            for (size_t j = i + 1; j < desired.size(); ++j)
                if (!used[j] && std::abs(desired[j].imag()) < 1e-12 &&
                    std::abs(desired[j].real() - li.real()) < 1e-9)
                    chain.push_back(j);
            for (size_t k = 0; k < chain.size(); ++k) {
                used[chain[k]] = true;
                lam(pos, pos) = li.real();
                if (k + 1 < chain.size()) lam(pos, pos + 1) = 1.0;
                ++pos;
            }
        } else {
            // Find the conjugate partner.
            size_t partner = desired.size();
            for (size_t j = i + 1; j < desired.size(); ++j)
                if (!used[j] && std::abs(desired[j].real() - li.real()) < 1e-9 &&
                    std::abs(desired[j].imag() + li.imag()) < 1e-9) {
                    partner = j;
                    break;
                }
            if (partner == desired.size())
                throw PlacementError("place_poles: spectrum not closed under conjugation");
            used[i] = used[partner] = true;
            lam(pos, pos) = li.real();
            lam(pos, pos + 1) = std::abs(li.imag());
            lam(pos + 1, pos) = -std::abs(li.imag());
            lam(pos + 1, pos + 1) = li.real();
            pos += 2;
        }
    }
    return lam;
}

}  // namespace

VectorXd balance_scaling(const MatrixXd& m) {
    Eigen::Index n = m.rows();
    VectorXd d = VectorXd::Ones(n);
    MatrixXd a = m;
    for (int sweep = 0; sweep < 8; ++sweep) {
        for (Eigen::Index i = 0; i < n; ++i) {
            double r = a.row(i).lpNorm<1>() - std::abs(a(i, i));
            double c = a.col(i).lpNorm<1>() - std::abs(a(i, i));
            if (r < 1e-300 || c < 1e-300) continue;
            double f = 1.0;
            while (c < r / 2.0) { c *= 2.0; r /= 2.0; f *= 2.0; }
            while (c > r * 2.0) { c /= 2.0; r *= 2.0; f /= 2.0; }
            d(i) *= f;
            a.col(i) *= f;
            a.row(i) /= f;
        }
    }
    return d;
}

namespace {

// Worst relative eigenvalue mismatch between the achieved and requested
// spectra (both sorted; pairing by order).
double spectrum_error(const VectorXcd& got,
                      std::vector<std::complex<double>> want) {
    std::vector<std::complex<double>> g(got.data(), got.data() + got.size());
    std::sort(g.begin(), g.end(), complex_less);
    std::sort(want.begin(), want.end(), complex_less);
    double err = 0.0;
    for (size_t i = 0; i < g.size(); ++i)
        err = std::max(err, std::abs(g[i] - want[i]) / std::max(1.0, std::abs(want[i])));
    return err;
}

}  // namespace

namespace {

MatrixXd kron(const MatrixXd& a, const MatrixXd& b) {
    MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

}  // namespace

MatrixXd solve_sylvester(const MatrixXd& a, const MatrixXd& b, const MatrixXd& c) {
    Eigen::Index n = a.rows(), m = b.rows();
    if (a.cols() != n || b.cols() != m || c.rows() != n || c.cols() != m)
        throw DimensionError("solve_sylvester: inconsistent dimensions");
    MatrixXd in = MatrixXd::Identity(n, n), im = MatrixXd::Identity(m, m);
    MatrixXd op = kron(im, a) - kron(b.transpose(), in);
    VectorXd vecc = Eigen::Map<const VectorXd>(c.data(), c.size());
    Eigen::FullPivLU<MatrixXd> lu(op);
    VectorXd vecx = lu.solve(vecc);
    for (int refine = 0; refine < 2 && vecx.allFinite(); ++refine)
        vecx += lu.solve(vecc - op * vecx);
    // Solvability is decided by the residual, not the pivot threshold: the
    // Kronecker operator of a strongly non-normal pair looks near-singular
    // to rank estimates while the solution is still well defined.
    double scale = std::max(1.0, vecc.norm());
    if (!vecx.allFinite() || (op * vecx - vecc).norm() > 1e-6 * scale)
        throw PlacementError("solve_sylvester: spectra of A and B intersect");
    return Eigen::Map<MatrixXd>(vecx.data(), n, m);
}

MatrixXd solve_lyapunov(const MatrixXd& a, const MatrixXd& q) {
    // Balance first: strongly non-normal inputs (mixed physical units) make
    // the raw Kronecker system numerically singular. With M_b solving the
    // balanced equation, M = D^{-1} M_b D^{-1} solves the original one.
    VectorXd d = balance_scaling(a);
    MatrixXd ab = d.cwiseInverse().asDiagonal() * a * d.asDiagonal();
    MatrixXd qb = d.asDiagonal() * q * d.asDiagonal();
    MatrixXd mb = solve_sylvester(ab.transpose(), -ab, -qb);
    mb = 0.5 * (mb + mb.transpose());
    MatrixXd m = d.cwiseInverse().asDiagonal() * mb * d.cwiseInverse().asDiagonal();
    return 0.5 * (m + m.transpose());
}

MatrixXd place_poles(const MatrixXd& a, const MatrixXd& c,
                     const std::vector<std::complex<double>>& desired) {
    Eigen::Index n = a.rows(), p = c.rows();
    if (a.cols() != n) throw DimensionError("place_poles: A not square");
    if (c.cols() != n) throw DimensionError("place_poles: C column mismatch");
    if (static_cast<Eigen::Index>(desired.size()) != n)
        throw PlacementError("place_poles: need exactly n desired eigenvalues");
    MatrixXd lam = real_spectrum_matrix(desired);  // throws on unmatched conjugates

    // Dual problem in balanced coordinates: find F with eig(M - Bd F) = desired.
    MatrixXd m = a.transpose();
    VectorXd d = balance_scaling(m);
    MatrixXd mb = d.cwiseInverse().asDiagonal() * m * d.asDiagonal();
    MatrixXd bb = d.cwiseInverse().asDiagonal() * c.transpose();

    auto lcg_fill = [](MatrixXd& g, uint64_t seed) {
        uint64_t s = 0x9e3779b97f4a7c15ull * (seed + 1);
        for (Eigen::Index i = 0; i < g.rows(); ++i)
            for (Eigen::Index j = 0; j < g.cols(); ++j) {
                s = s * 6364136223846793005ull + 1442695040888963407ull;
                g(i, j) = static_cast<double>(s >> 11) / 9007199254740992.0 - 0.5;
            }
    };

    double spread = 1.0;
    for (const auto& lambda : desired) spread = std::max(spread, std::abs(lambda));

    std::string last_err;
    MatrixXd best_l;
    double best_err = std::numeric_limits<double>::infinity();
    for (int attempt = 0; attempt < 12; ++attempt) {
        MatrixXd g = MatrixXd::Zero(p, n);
        if (attempt == 0) {
            for (Eigen::Index j = 0; j < n; ++j) g(j % p, j) = 1.0;  // cyclic tie-break
        } else {
            lcg_fill(g, static_cast<uint64_t>(attempt));
        }
        // A pre-shift injection detunes open-loop eigenvalues that collide
        // with the requested spectrum (the Sylvester solve needs disjointness).
        MatrixXd f0 = MatrixXd::Zero(p, n);
        if (attempt >= 2) {
            lcg_fill(f0, 1000 + static_cast<uint64_t>(attempt));
            f0 *= 0.05 * spread;
        }
        try {
            MatrixXd mshift = mb - bb * f0;
            MatrixXd x = solve_sylvester(mshift, lam, bb * g);
            Eigen::FullPivLU<MatrixXd> lux(x);
            if (!lux.isInvertible()) {
                last_err = "closed-loop basis singular";
                continue;
            }
            MatrixXd fb = f0 + g * lux.inverse();
            MatrixXd l = d.cwiseInverse().asDiagonal() * fb.transpose();
            double err = spectrum_error(eigenvalues(a - l * c), desired);
            if (err < best_err) {
                best_err = err;
                best_l = l;
            }
            if (best_err < 1e-9) break;
            last_err = "round-trip spectrum mismatch";
        } catch (const PlacementError& e) {
            last_err = e.what();
        }
    }
    if (best_err <= 1e-6) return best_l;
    throw PlacementError("place_poles: spectrum not assignable (" + last_err + ")");
}

VectorXd rk4_step(const std::function<VectorXd(double, const VectorXd&)>& f,
                  const VectorXd& state, double t, double dt) {
    if (!(dt > 0.0)) throw IntegrationError("rk4_step: dt must be positive", t);
    VectorXd k1 = f(t, state);
    VectorXd k2 = f(t + dt / 2.0, state + (dt / 2.0) * k1);
    VectorXd k3 = f(t + dt / 2.0, state + (dt / 2.0) * k2);
    VectorXd k4 = f(t + dt, state + dt * k3);
    VectorXd next = state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!next.allFinite())
        throw IntegrationError("rk4_step: non-finite stage value", t);
    return next;
}

}  // namespace mgsim
