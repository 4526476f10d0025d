#include "conic/solver.hpp"

#include "errors.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

// Homogeneous self-dual embedding of
//     min c'x  s.t.  A x = b,  G x + s = h,  s in K
// solved with a Nesterov-Todd scaled Mehrotra predictor-corrector. The KKT
// system
//     [ dI   A'   G'      ] [dx]   [bx]
//     [ A   -dI   0       ] [dy] = [by]
//     [ G    0   -W^2-dI  ] [dz]   [bz]
// is factored with a sparse LDL' (the small static shift d keeps it
// quasidefinite); directions are polished by iterative refinement against the
// unregularized matrix. Cone scalings use dense per-cone W^2 blocks, which is
// cheap because every cone this code base generates has a handful of rows.

namespace irsuav::conic {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;
using Eigen::VectorXd;

struct SocScaling {
    int offset = 0;
    int dim = 0;
    double eta_sq = 1.0;
    double a = 1.0;          // head of the normalized scaling point
    VectorXd q;              // tail of the normalized scaling point
    Eigen::MatrixXd W2;      // dense eta^2 * (2 w w' - J)
};

struct Iterate {
    VectorXd x, y, z, s;
    double tau = 1.0, kap = 1.0;

    // statistics
    double gap = kInf, mu = kInf, pcost = kInf, dcost = kInf;
    double kapovert = kInf, pres = kInf, dres = kInf;
    std::optional<double> relgap, pinfres, dinfres;
    double cx = 0, by = 0, hz = 0;
    int iter = 0;

    bool better_than(const Iterate& o) const {
        if (pinfres.has_value() && kapovert > 1.0) {
            if (o.pinfres.has_value()) {
                return gap > 0 && o.gap > 0 && gap < o.gap &&
                       *pinfres > 0 && *pinfres < o.pres &&
                       mu > 0 && mu < o.mu;
            }
            return gap > 0 && o.gap > 0 && gap < o.gap && mu > 0 && mu < o.mu;
        }
        return gap > 0 && o.gap > 0 && gap < o.gap &&
               pres > 0 && pres < o.pres &&
               dres > 0 && dres < o.dres &&
               kapovert > 0 && kapovert < o.kapovert &&
               mu > 0 && mu < o.mu;
    }
};

enum class Verdict { NotConverged, Optimal, PrimalInfeasible, DualInfeasible };

class HsdSolver {
public:
    HsdSolver(const StandardForm& sf, const SolveSettings& st)
        : st_(st), n_(sf.n), p_(static_cast<int>(sf.A.rows())),
          m_(static_cast<int>(sf.G.rows())), n_lp_(sf.n_lp),
          A_(sf.A), G_(sf.G), b_(sf.b), h_(sf.h), c_(sf.c) {
        int off = n_lp_;
        for (int d : sf.soc_dims) {
            SocScaling sc;
            sc.offset = off;
            sc.dim = d;
            sc.q = VectorXd::Zero(d - 1);
            sc.W2 = Eigen::MatrixXd::Identity(d, d);
            socs_.push_back(std::move(sc));
            off += d;
        }
        lp_w2_ = VectorXd::Ones(n_lp_);
        equilibrate();
        At_ = A_.transpose();
        Gt_ = G_.transpose();
        resx0_ = std::max(1.0, c_.norm());
        resy0_ = std::max(1.0, b_.norm());
        resz0_ = std::max(1.0, h_.norm());
        build_kkt();
    }

    SolveResult run();

    // filled by run(); x in equilibrated coordinates divided by tau
    VectorXd scaled_solution;
    Eigen::VectorXd var_scale() const { return xe_; }

private:
    SolveSettings st_;
    int n_, p_, m_, n_lp_;
    SpMat A_, G_, At_, Gt_;
    VectorXd b_, h_, c_;
    VectorXd xe_, ae_, ge_;  // equilibration scalings
    double resx0_ = 1, resy0_ = 1, resz0_ = 1;
    std::vector<SocScaling> socs_;
    VectorXd lp_w2_;
    VectorXd lambda_;

    SpMat K_;
    Eigen::SimplicialLDLT<SpMat> ldlt_;
    bool pattern_ready_ = false;
    double delta_used_ = 0.0;

    Iterate w_, best_;
    VectorXd rx_, ry_, rz_;
    double rt_ = 0, hresx_ = 0, hresy_ = 0, hresz_ = 0;
    double nx_ = 0, ny_ = 0, nz_ = 0, ns_ = 0;

    void equilibrate();
    void build_kkt();
    void set_kkt_values(double delta, std::vector<Triplet>& trips) const;
    bool factorize();
    int solve_kkt(const VectorXd& rhs, VectorXd& dx, VectorXd& dy, VectorXd& dz) const;

    bool update_scalings();
    void bring_to_cone(const VectorXd& r, VectorXd& s) const;
    void apply_W(const VectorXd& in, VectorXd& out) const;
    void apply_W2(const VectorXd& in, VectorXd& out) const;
    void conic_product(const VectorXd& u, const VectorXd& v, VectorXd& out) const;
    void conic_division(const VectorXd& u, const VectorXd& w, VectorXd& out) const;
    double line_search(const VectorXd& ds, const VectorXd& dz, double tau,
                       double dtau, double kap, double dkap) const;

    void compute_residuals();
    void update_statistics();
    Verdict check_exit(bool reduced) const;
};

void HsdSolver::equilibrate() {
    xe_ = VectorXd::Ones(n_);
    ae_ = VectorXd::Ones(p_);
    ge_ = VectorXd::Ones(m_);

    auto max_cols = [](VectorXd& e, const SpMat& mat) {
        for (int j = 0; j < mat.outerSize(); ++j)
            for (SpMat::InnerIterator it(mat, j); it; ++it)
                e[it.col()] = std::max(e[it.col()], std::abs(it.value()));
    };
    auto scale_rows = [](const VectorXd& v, SpMat& mat) {
        for (int j = 0; j < mat.outerSize(); ++j)
            for (SpMat::InnerIterator it(mat, j); it; ++it)
                it.valueRef() /= v[it.row()];
    };
    auto scale_cols = [](const VectorXd& v, SpMat& mat) {
        for (int j = 0; j < mat.outerSize(); ++j)
            for (SpMat::InnerIterator it(mat, j); it; ++it)
                it.valueRef() /= v[it.col()];
    };
    auto sqrt_or_one = [](VectorXd& v) {
        for (int i = 0; i < v.size(); ++i)
            v[i] = std::abs(v[i]) < 1e-6 ? 1.0 : std::sqrt(v[i]);
    };

    SpMat At = A_.transpose(), Gt = G_.transpose();
    for (int it = 0; it < st_.equil_iters; ++it) {
        VectorXd xt = VectorXd::Zero(n_), at = VectorXd::Zero(p_), gt = VectorXd::Zero(m_);
        max_cols(xt, A_);
        max_cols(xt, G_);
        max_cols(at, At);
        max_cols(gt, Gt);

        // Rows of one second-order cone must share a single scalar or the
        // cone geometry changes; collapse the block to its total.
        for (const auto& sc : socs_) {
            const double total = gt.segment(sc.offset, sc.dim).sum();
            gt.segment(sc.offset, sc.dim).setConstant(total);
        }

        sqrt_or_one(xt);
        sqrt_or_one(at);
        sqrt_or_one(gt);

        scale_rows(at, A_);
        scale_cols(xt, A_);
        scale_rows(gt, G_);
        scale_cols(xt, G_);
        At = A_.transpose();
        Gt = G_.transpose();

        xe_ = xe_.cwiseProduct(xt);
        ae_ = ae_.cwiseProduct(at);
        ge_ = ge_.cwiseProduct(gt);
    }
    b_ = b_.cwiseQuotient(ae_);
    h_ = h_.cwiseQuotient(ge_);
    c_ = c_.cwiseQuotient(xe_);
}

void HsdSolver::build_kkt() {
    std::vector<Triplet> trips;
    set_kkt_values(st_.static_reg, trips);
    K_.resize(n_ + p_ + m_, n_ + p_ + m_);
    K_.setFromTriplets(trips.begin(), trips.end());
    ldlt_.analyzePattern(K_);
    pattern_ready_ = true;
}

// Lower triangle of the regularized KKT matrix. The entry set is identical on
// every call (dense cone blocks carry explicit zeros at identity scaling) so
// the symbolic factorization stays valid.
void HsdSolver::set_kkt_values(double delta, std::vector<Triplet>& trips) const {
    trips.clear();
    for (int i = 0; i < n_; ++i) trips.emplace_back(i, i, delta);
    for (int j = 0; j < A_.outerSize(); ++j)
        for (SpMat::InnerIterator it(A_, j); it; ++it)
            trips.emplace_back(n_ + static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    for (int i = 0; i < p_; ++i) trips.emplace_back(n_ + i, n_ + i, -delta);
    for (int j = 0; j < G_.outerSize(); ++j)
        for (SpMat::InnerIterator it(G_, j); it; ++it)
            trips.emplace_back(n_ + p_ + static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    const int zoff = n_ + p_;
    for (int i = 0; i < n_lp_; ++i)
        trips.emplace_back(zoff + i, zoff + i, -lp_w2_[i] - delta);
    for (const auto& sc : socs_) {
        for (int i = 0; i < sc.dim; ++i)
            for (int j = 0; j <= i; ++j)
                trips.emplace_back(zoff + sc.offset + i, zoff + sc.offset + j,
                                   -sc.W2(i, j) - (i == j ? delta : 0.0));
    }
}

bool HsdSolver::factorize() {
    // Escalate hard before giving up: iterative refinement corrects against
    // the unregularized matrix, so even a heavy delta yields usable steps.
    std::vector<Triplet> trips;
    for (double mult : {1.0, 10.0, 100.0, 1e4, 1e6, 1e8}) {
        set_kkt_values(st_.static_reg * mult, trips);
        K_.setFromTriplets(trips.begin(), trips.end());
        ldlt_.factorize(K_);
        if (ldlt_.info() == Eigen::Success) {
            delta_used_ = st_.static_reg * mult;
            return true;
        }
    }
    return false;
}

int HsdSolver::solve_kkt(const VectorXd& rhs, VectorXd& dx, VectorXd& dy,
                         VectorXd& dz) const {
    VectorXd sol = ldlt_.solve(rhs);
    const double thresh = (1.0 + rhs.lpNorm<Eigen::Infinity>()) * st_.linsys_acc;

    VectorXd err(rhs.size()), dsol;
    double nerr_prev = kInf;
    int refines = 0;
    for (int it = 0; it <= st_.refine_iters; ++it) {
        // Residual against the unregularized KKT matrix.
        const auto sx = sol.head(n_);
        const auto sy = sol.segment(n_, p_);
        const auto sz = sol.tail(m_);
        err.head(n_) = rhs.head(n_) - Gt_ * sz;
        if (p_ > 0) {
            err.head(n_) -= At_ * sy;
            err.segment(n_, p_) = rhs.segment(n_, p_) - A_ * sx;
        }
        VectorXd w2z(m_);
        apply_W2(sz, w2z);
        err.tail(m_) = rhs.tail(m_) - G_ * sx + w2z;

        const double nerr = err.lpNorm<Eigen::Infinity>();
        if (nerr < thresh) break;
        if (it > 0) {
            if (nerr > nerr_prev) {
                sol -= dsol;  // refinement diverged; keep the previous iterate
                break;
            }
            if (nerr_prev < st_.refine_stop_ratio * nerr) break;
        }
        if (it == st_.refine_iters) break;
        dsol = ldlt_.solve(err);
        sol += dsol;
        nerr_prev = nerr;
        ++refines;
    }
    dx = sol.head(n_);
    dy = sol.segment(n_, p_);
    dz = sol.tail(m_);
    return refines;
}

bool HsdSolver::update_scalings() {
    for (int i = 0; i < n_lp_; ++i) {
        const double si = w_.s[i], zi = w_.z[i];
        if (si <= 0 || zi <= 0) return false;
        lp_w2_[i] = si / zi;
    }
    for (auto& sc : socs_) {
        const auto s = w_.s.segment(sc.offset, sc.dim);
        const auto z = w_.z.segment(sc.offset, sc.dim);
        const double sres = s[0] * s[0] - s.tail(sc.dim - 1).squaredNorm();
        const double zres = z[0] * z[0] - z.tail(sc.dim - 1).squaredNorm();
        if (sres <= 0 || zres <= 0) return false;
        const double snorm = std::sqrt(sres), znorm = std::sqrt(zres);
        const VectorXd sbar = s / snorm, zbar = z / znorm;
        sc.eta_sq = snorm / znorm;
        const double gamma = std::sqrt(0.5 * (1.0 + sbar.dot(zbar)));
        sc.a = (sbar[0] + zbar[0]) / (2.0 * gamma);
        sc.q = (sbar.tail(sc.dim - 1) - zbar.tail(sc.dim - 1)) / (2.0 * gamma);

        VectorXd wbar(sc.dim);
        wbar[0] = sc.a;
        wbar.tail(sc.dim - 1) = sc.q;
        sc.W2 = 2.0 * sc.eta_sq * wbar * wbar.transpose();
        sc.W2(0, 0) -= sc.eta_sq;
        for (int i = 1; i < sc.dim; ++i) sc.W2(i, i) += sc.eta_sq;
    }
    // lambda = W z
    apply_W(w_.z, lambda_);
    for (int i = 0; i < n_lp_; ++i) lambda_[i] = std::sqrt(w_.s[i] * w_.z[i]);
    return true;
}

void HsdSolver::apply_W(const VectorXd& in, VectorXd& out) const {
    out.resize(m_);
    for (int i = 0; i < n_lp_; ++i) out[i] = std::sqrt(lp_w2_[i]) * in[i];
    for (const auto& sc : socs_) {
        const auto v = in.segment(sc.offset, sc.dim);
        const double eta = std::sqrt(sc.eta_sq);
        const double zeta = sc.q.dot(v.tail(sc.dim - 1));
        const double factor = v[0] + zeta / (1.0 + sc.a);
        out[sc.offset] = eta * (sc.a * v[0] + zeta);
        out.segment(sc.offset + 1, sc.dim - 1) =
            eta * (v.tail(sc.dim - 1) + factor * sc.q);
    }
}

void HsdSolver::apply_W2(const VectorXd& in, VectorXd& out) const {
    out.resize(m_);
    out.head(n_lp_) = lp_w2_.cwiseProduct(in.head(n_lp_));
    for (const auto& sc : socs_)
        out.segment(sc.offset, sc.dim) = sc.W2 * in.segment(sc.offset, sc.dim);
}

void HsdSolver::conic_product(const VectorXd& u, const VectorXd& v, VectorXd& out) const {
    out.resize(m_);
    out.head(n_lp_) = u.head(n_lp_).cwiseProduct(v.head(n_lp_));
    for (const auto& sc : socs_) {
        const auto uk = u.segment(sc.offset, sc.dim);
        const auto vk = v.segment(sc.offset, sc.dim);
        out[sc.offset] = uk.dot(vk);
        out.segment(sc.offset + 1, sc.dim - 1) =
            uk[0] * vk.tail(sc.dim - 1) + vk[0] * uk.tail(sc.dim - 1);
    }
}

// v = u \ w in the Jordan algebra (arrowhead inverse per cone)
void HsdSolver::conic_division(const VectorXd& u, const VectorXd& w, VectorXd& out) const {
    out.resize(m_);
    out.head(n_lp_) = w.head(n_lp_).cwiseQuotient(u.head(n_lp_));
    for (const auto& sc : socs_) {
        const auto uk = u.segment(sc.offset, sc.dim);
        const auto wk = w.segment(sc.offset, sc.dim);
        const double rho = uk[0] * uk[0] - uk.tail(sc.dim - 1).squaredNorm();
        const double zeta = uk.tail(sc.dim - 1).dot(wk.tail(sc.dim - 1));
        out[sc.offset] = (uk[0] * wk[0] - zeta) / rho;
        out.segment(sc.offset + 1, sc.dim - 1) =
            ((zeta / uk[0] - wk[0]) / rho) * uk.tail(sc.dim - 1) +
            wk.tail(sc.dim - 1) / uk[0];
    }
}

void HsdSolver::bring_to_cone(const VectorXd& r, VectorXd& s) const {
    double alpha = -st_.step_back;
    for (int i = 0; i < n_lp_; ++i)
        if (r[i] <= 0 && -r[i] > alpha) alpha = -r[i];
    for (const auto& sc : socs_) {
        const double cres = r[sc.offset] - r.segment(sc.offset + 1, sc.dim - 1).norm();
        if (cres <= 0 && -cres > alpha) alpha = -cres;
    }
    alpha += 1.0;
    s = r;
    s.head(n_lp_).array() += alpha;
    for (const auto& sc : socs_) s[sc.offset] += alpha;
}

// Max step in the scaled (lambda) space; ds and dz are the W-scaled
// directions.
double HsdSolver::line_search(const VectorXd& ds, const VectorXd& dz,
                              double tau, double dtau, double kap,
                              double dkap) const {
    double alpha = 2.0;
    for (int i = 0; i < n_lp_; ++i) {
        if (ds[i] < 0) alpha = std::min(alpha, -lambda_[i] / ds[i]);
        if (dz[i] < 0) alpha = std::min(alpha, -lambda_[i] / dz[i]);
    }
    if (dtau < 0) alpha = std::min(alpha, -tau / dtau);
    if (dkap < 0) alpha = std::min(alpha, -kap / dkap);

    for (const auto& sc : socs_) {
        const auto lk = lambda_.segment(sc.offset, sc.dim);
        const double lknorm2 =
            std::max(lk[0] * lk[0] - lk.tail(sc.dim - 1).squaredNorm(), 1e-300);
        const double lknorm = std::sqrt(lknorm2);
        const VectorXd lkbar = lk / lknorm;
        const double lknorminv = 1.0 / lknorm;

        auto cone_rate = [&](const VectorXd& d) {
            const double lkbar_times_d =
                lkbar[0] * d[sc.offset] -
                lkbar.tail(sc.dim - 1).dot(d.segment(sc.offset + 1, sc.dim - 1));
            const double factor = (lkbar_times_d + d[sc.offset]) / (lkbar[0] + 1.0);
            const double rho0 = lknorminv * lkbar_times_d;
            const VectorXd rho1 =
                lknorminv * (d.segment(sc.offset + 1, sc.dim - 1) -
                             factor * lkbar.tail(sc.dim - 1));
            return rho1.norm() - rho0;
        };
        const double step_rate = std::max(cone_rate(ds), cone_rate(dz));
        if (step_rate > 0) alpha = std::min(alpha, 1.0 / step_rate);
    }
    return std::clamp(alpha, st_.step_min, st_.step_max);
}

void HsdSolver::compute_residuals() {
    rx_ = -(Gt_ * w_.z);
    if (p_ > 0) rx_ -= At_ * w_.y;
    hresx_ = rx_.norm();
    rx_ -= w_.tau * c_;

    if (p_ > 0) {
        ry_ = A_ * w_.x;
        hresy_ = ry_.norm();
        ry_ -= w_.tau * b_;
    } else {
        ry_.resize(0);
        hresy_ = 0;
    }

    rz_ = w_.s + G_ * w_.x;
    hresz_ = rz_.norm();
    rz_ -= w_.tau * h_;

    w_.cx = c_.dot(w_.x);
    w_.by = p_ > 0 ? b_.dot(w_.y) : 0.0;
    w_.hz = h_.dot(w_.z);
    rt_ = w_.kap + w_.cx + w_.by + w_.hz;

    nx_ = w_.x.norm();
    ny_ = w_.y.norm();
    nz_ = w_.z.norm();
    ns_ = w_.s.norm();
}

void HsdSolver::update_statistics() {
    w_.gap = w_.s.dot(w_.z);
    w_.mu = (w_.gap + w_.kap * w_.tau) /
            (static_cast<double>(n_lp_ + static_cast<int>(socs_.size())) + 1.0);
    w_.kapovert = w_.kap / w_.tau;
    w_.pcost = w_.cx / w_.tau;
    w_.dcost = -(w_.hz + w_.by) / w_.tau;

    if (w_.pcost < 0)
        w_.relgap = w_.gap / (-w_.pcost);
    else if (w_.dcost > 0)
        w_.relgap = w_.gap / w_.dcost;
    else
        w_.relgap.reset();

    const double nry = p_ > 0 ? ry_.norm() / std::max(resy0_ + nx_, 1.0) : 0.0;
    const double nrz = rz_.norm() / std::max(resz0_ + nx_ + ns_, 1.0);
    w_.pres = std::max(nry, nrz) / w_.tau;
    w_.dres = rx_.norm() / std::max(resx0_ + ny_ + nz_, 1.0) / w_.tau;

    w_.pinfres.reset();
    w_.dinfres.reset();
    if ((w_.hz + w_.by) / std::max(ny_ + nz_, 1.0) < -st_.rel_gap_tol)
        w_.pinfres = hresx_ / std::max(ny_ + nz_, 1.0);
    if (w_.cx / std::max(nx_, 1.0) < -st_.rel_gap_tol)
        w_.dinfres = std::max(hresy_ / std::max(nx_, 1.0),
                              hresz_ / std::max(nx_ + ns_, 1.0));
}

Verdict HsdSolver::check_exit(bool reduced) const {
    const double feastol = reduced ? st_.feas_tol_reduced : st_.feas_tol;
    const double abstol = reduced ? st_.abs_gap_tol_reduced : st_.abs_gap_tol;
    const double reltol = reduced ? st_.rel_gap_tol_reduced : st_.rel_gap_tol;

    if ((-w_.cx > 0 || -w_.by - w_.hz >= -abstol) &&
        w_.pres < feastol && w_.dres < feastol &&
        (w_.gap < abstol || (w_.relgap.has_value() && *w_.relgap < reltol)))
        return Verdict::Optimal;
    if (w_.dinfres.has_value() && *w_.dinfres < feastol && w_.tau < w_.kap)
        return Verdict::DualInfeasible;
    if ((w_.pinfres.has_value() && *w_.pinfres < feastol && w_.tau < w_.kap) ||
        (w_.tau < feastol && w_.kap < feastol && w_.pinfres.has_value() &&
         *w_.pinfres < feastol))
        return Verdict::PrimalInfeasible;
    return Verdict::NotConverged;
}

SolveResult HsdSolver::run() {
    SolveResult res;
    const int N = n_ + p_ + m_;

    // Initialization at identity scaling
    if (!factorize()) {
        res.status = SolveStatus::NumericalFailure;
        res.detail = "initial kkt factorization failed";
        scaled_solution = VectorXd::Zero(n_);
        return res;
    }
    VectorXd rhs1 = VectorXd::Zero(N);
    rhs1.segment(n_, p_) = b_;
    rhs1.tail(m_) = h_;
    VectorXd dx1(n_), dy1(p_), dz1(m_), dx2(n_), dy2(p_), dz2(m_);
    solve_kkt(rhs1, dx1, dy1, dz1);
    w_.x = dx1;
    bring_to_cone(-dz1, w_.s);

    VectorXd rhs2 = VectorXd::Zero(N);
    rhs2.head(n_) = -c_;
    solve_kkt(rhs2, dx2, dy2, dz2);
    w_.y = dy2;
    bring_to_cone(dz2, w_.z);
    w_.tau = 1.0;
    w_.kap = 1.0;

    rhs1.head(n_) = -c_;  // static RHS for all later iterations

    double pres_prev = kInf;
    double last_step = kInf;
    SolveStatus status = SolveStatus::IterationLimit;
    std::string detail = "iteration limit";

    auto classify_stalled = [&](SolveStatus fallback, const char* why) {
        // A stalled exit can still be a usable point; say so in the detail.
        switch (check_exit(true)) {
            case Verdict::Optimal:
                status = fallback;
                detail = std::string(why) + "; reduced-accuracy optimal point";
                break;
            case Verdict::PrimalInfeasible:
                status = SolveStatus::Infeasible;
                detail = std::string(why) + "; reduced-accuracy infeasibility certificate";
                break;
            case Verdict::DualInfeasible:
                status = SolveStatus::NumericalFailure;
                detail = std::string(why) + "; reduced-accuracy dual infeasibility certificate";
                break;
            case Verdict::NotConverged:
                status = fallback;
                detail = why;
                break;
        }
    };

    for (int iter = 0; iter <= st_.max_iters; ++iter) {
        w_.iter = iter;
        compute_residuals();
        update_statistics();

        if (iter > 0 && (w_.pres > st_.safeguard * pres_prev || w_.gap < 0)) {
            w_ = best_;
            classify_stalled(SolveStatus::NumericalFailure, "unreliable search direction");
            break;
        }
        pres_prev = w_.pres;

        const Verdict v = check_exit(false);
        if (v == Verdict::Optimal) {
            status = SolveStatus::Optimal;
            detail = "optimal";
            break;
        }
        if (v == Verdict::PrimalInfeasible) {
            status = SolveStatus::Infeasible;
            detail = "primal infeasibility certificate";
            break;
        }
        if (v == Verdict::DualInfeasible) {
            status = SolveStatus::NumericalFailure;
            detail = "dual infeasibility certificate (objective unbounded)";
            break;
        }

        if (iter > 0 && last_step <= st_.step_min * st_.step_back * (1 + 1e-12)) {
            if (!w_.better_than(best_)) w_ = best_;
            classify_stalled(SolveStatus::NumericalFailure, "no further progress");
            break;
        }
        if (iter == st_.max_iters) {
            if (!w_.better_than(best_)) w_ = best_;
            classify_stalled(SolveStatus::IterationLimit, "iteration limit");
            break;
        }
        if (std::isnan(w_.pcost)) {
            if (!(iter == 0 || w_.better_than(best_)) && best_.x.size() > 0) w_ = best_;
            classify_stalled(SolveStatus::NumericalFailure, "nan encountered");
            break;
        }

        if (iter == 0 || w_.better_than(best_)) best_ = w_;

        if (!update_scalings()) {
            w_ = best_;
            classify_stalled(SolveStatus::NumericalFailure, "iterate left the cone");
            break;
        }
        if (!factorize()) {
            w_ = best_;
            classify_stalled(SolveStatus::NumericalFailure, "kkt factorization failed");
            break;
        }

        solve_kkt(rhs1, dx1, dy1, dz1);

        // Predictor (affine) direction
        rhs2.head(n_) = rx_;
        rhs2.segment(n_, p_) = -ry_;
        rhs2.tail(m_) = w_.s - rz_;
        solve_kkt(rhs2, dx2, dy2, dz2);

        const double dtau_denom =
            w_.kap / w_.tau - (c_.dot(dx1) + b_.dot(dy1) + h_.dot(dz1));
        const double dtauaff =
            (rt_ - w_.kap + c_.dot(dx2) + b_.dot(dy2) + h_.dot(dz2)) / dtau_denom;
        VectorXd dzaff = dz2 + dtauaff * dz1;
        VectorXd W_dzaff(m_);
        apply_W(dzaff, W_dzaff);
        VectorXd dsaff_by_W = -W_dzaff - lambda_;
        const double dkapaff = -w_.kap - (w_.kap / w_.tau) * dtauaff;

        const double alpha_aff = line_search(dsaff_by_W, W_dzaff, w_.tau,
                                             dtauaff, w_.kap, dkapaff);
        const double sigma = std::clamp(std::pow(1.0 - alpha_aff, 3),
                                        st_.sigma_min, st_.sigma_max);

        // Corrector (combined) direction
        VectorXd ds1(m_), ds2(m_);
        conic_product(lambda_, lambda_, ds1);
        conic_product(dsaff_by_W, W_dzaff, ds2);
        ds1 += ds2;
        const double sigma_mu = sigma * w_.mu;
        ds1.head(n_lp_).array() -= sigma_mu;
        for (const auto& sc : socs_) ds1[sc.offset] -= sigma_mu;

        const double one_minus_sigma = 1.0 - sigma;
        rhs2.head(n_) = one_minus_sigma * rx_;
        rhs2.segment(n_, p_) = -one_minus_sigma * ry_;
        VectorXd lam_div(m_), W_lam_div(m_);
        conic_division(lambda_, ds1, lam_div);
        apply_W(lam_div, W_lam_div);
        rhs2.tail(m_) = -one_minus_sigma * rz_ + W_lam_div;
        solve_kkt(rhs2, dx2, dy2, dz2);

        const double bkap = w_.kap * w_.tau + dkapaff * dtauaff - sigma_mu;
        const double dtau = (one_minus_sigma * rt_ - bkap / w_.tau +
                             c_.dot(dx2) + b_.dot(dy2) + h_.dot(dz2)) /
                            dtau_denom;
        const VectorXd dx = dx2 + dtau * dx1;
        const VectorXd dy = p_ > 0 ? VectorXd(dy2 + dtau * dy1) : VectorXd();
        const VectorXd dz = dz2 + dtau * dz1;
        VectorXd W_dz(m_);
        apply_W(dz, W_dz);
        const VectorXd ds_by_W = -lam_div - W_dz;
        const double dkap = -(bkap + w_.kap * dtau) / w_.tau;

        const double step =
            st_.step_back *
            line_search(ds_by_W, W_dz, w_.tau, dtau, w_.kap, dkap);
        last_step = step;

        w_.x += step * dx;
        if (p_ > 0) w_.y += step * dy;
        w_.z += step * dz;
        VectorXd ds_true(m_);
        apply_W(ds_by_W, ds_true);
        w_.s += step * ds_true;
        w_.tau += step * dtau;
        w_.kap += step * dkap;
    }

    res.status = status;
    res.detail = detail;
    res.iterations = w_.iter;
    res.primal_residual = w_.pres;
    res.dual_residual = w_.dres;
    res.duality_gap = w_.gap;
    res.rel_gap = w_.relgap.value_or(kInf);
    const double tau = w_.tau > 0 ? w_.tau : 1.0;
    scaled_solution = w_.x / tau;
    return res;
}

SolveResult solve_trivial(const Program& p) {
    // No variables: every row is a constant; report feasibility directly.
    SolveResult res;
    res.status = SolveStatus::Optimal;
    res.detail = "optimal (constant program)";
    res.objective = p.objective().constant;
    const std::vector<double> empty;
    const double tol = 1e-12;
    auto infeasible = [&](const std::string& why) {
        res.status = SolveStatus::Infeasible;
        res.detail = why;
    };
    for (const auto& row : p.eq_rows())
        if (std::abs(row.e.constant - row.rhs) > tol) infeasible("constant equality violated");
    for (const auto& row : p.le_rows())
        if (row.e.constant > row.rhs + tol) infeasible("constant inequality violated");
    for (const auto& cb : p.cones()) {
        if (const auto* soc = std::get_if<SocBlock>(&cb)) {
            double head = soc->rows[0].constant, tail2 = 0;
            for (size_t i = 1; i < soc->rows.size(); ++i)
                tail2 += soc->rows[i].constant * soc->rows[i].constant;
            if (head + tol < std::sqrt(tail2)) infeasible("constant cone violated");
        } else {
            const auto& rc = std::get<RsocBlock>(cb);
            double x2 = 0;
            for (const auto& e : rc.xs) x2 += e.constant * e.constant;
            if (rc.a.constant < -tol || rc.b.constant < -tol ||
                2 * rc.a.constant * rc.b.constant + tol < x2)
                infeasible("constant cone violated");
        }
    }
    return res;
}

}  // namespace

const char* status_name(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::IterationLimit: return "iteration-limit";
        case SolveStatus::NumericalFailure: return "numerical-failure";
    }
    return "unknown";
}

SolveResult solve(const Program& p, const SolveSettings& settings) {
    if (p.num_vars() == 0) return solve_trivial(p);

    const StandardForm sf = p.standard_form();
    HsdSolver solver(sf, settings);
    SolveResult res = solver.run();

    const Eigen::VectorXd xe = solver.var_scale();
    res.x.resize(static_cast<size_t>(sf.n));
    for (int i = 0; i < sf.n; ++i)
        res.x[static_cast<size_t>(i)] = solver.scaled_solution[i] / xe[i];
    res.objective = p.objective_value(res.x);
    return res;
}

SolveResult solve(const Program& p, const std::vector<double>& warm_start,
                  const SolveSettings& settings) {
    if (!warm_start.empty() &&
        warm_start.size() != static_cast<size_t>(p.num_vars()))
        throw Error(ErrorCode::BadParameter, "warm start has wrong dimension");
    return solve(p, settings);
}

}  // namespace irsuav::conic
