#include "stratport/ipm.hpp"

#include <algorithm>
#include <cmath>

#include "stratport/error.hpp"

namespace stratport::ipm {

namespace {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
    double alpha = 1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (dv(i) < 0.0) alpha = std::min(alpha, -v(i) / dv(i));
    }
    return alpha;
}

double inf_norm(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace

Result solve(const Problem& p, const Eigen::VectorXd& x0, const Options& options) {
    const Eigen::Index m = p.c.size();
    const Eigen::Index n_lin = p.G.rows();
    const Eigen::Index n_eq = p.A.rows();
    const Eigen::Index n_ineq = n_lin + (p.has_quadratic ? 1 : 0);
    if (x0.size() != m || p.G.cols() != m || p.h.size() != n_lin || (n_eq > 0 && p.A.cols() != m) ||
        p.b.size() != n_eq) {
        throw InputError("interior-point problem has inconsistent dimensions");
    }
    if (p.has_quadratic && (p.Q.rows() != m || p.Q.cols() != m || p.a.size() != m)) {
        throw InputError("interior-point quadratic constraint has wrong dimensions");
    }
    if (n_ineq == 0) throw InputError("interior-point problem needs at least one inequality");

    auto quad_value = [&](const Eigen::VectorXd& x) { return x.dot(p.Q * x) + p.a.dot(x) - p.r; };
    auto constraint_values = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd g(n_ineq);
        g.head(n_lin) = p.G * x - p.h;
        if (p.has_quadratic) g(n_lin) = quad_value(x);
        return g;
    };

    Result res;
    Eigen::VectorXd x = x0;
    Eigen::VectorXd z = (-constraint_values(x)).cwiseMax(1.0);
    Eigen::VectorXd lam = Eigen::VectorXd::Ones(n_ineq);
    Eigen::VectorXd nu = Eigen::VectorXd::Zero(n_eq);
    const double c_scale = 1.0 + inf_norm(p.c);

    for (int it = 0; it <= options.max_iterations; ++it) {
        Eigen::VectorXd grad_q;
        Eigen::VectorXd rd = p.c + p.G.transpose() * lam.head(n_lin);
        if (p.has_quadratic) {
            grad_q = 2.0 * (p.Q * x) + p.a;
            rd += lam(n_lin) * grad_q;
        }
        if (n_eq > 0) rd += p.A.transpose() * nu;
        const Eigen::VectorXd rp = n_eq > 0 ? Eigen::VectorXd(p.A * x - p.b) : Eigen::VectorXd();
        const Eigen::VectorXd rg = constraint_values(x) + z;
        const double mu = lam.dot(z) / static_cast<double>(n_ineq);

        res.kkt_residual = std::max({inf_norm(rd) / c_scale, inf_norm(rp), inf_norm(rg), mu});
        res.iterations = it;
        if (inf_norm(rd) <= options.tol_feas * c_scale && inf_norm(rp) <= options.tol_feas &&
            inf_norm(rg) <= options.tol_feas && mu <= options.tol_gap) {
            res.converged = true;
            break;
        }
        if (it == options.max_iterations || !x.allFinite() || !lam.allFinite()) break;

        const Eigen::VectorXd d = lam.cwiseQuotient(z);
        // J^T D J with J = [G; grad_q^T], accumulated row by row (G rows are short)
        Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(m, m);
        for (Eigen::Index r = 0; r < n_lin; ++r) {
            for (SpMat::InnerIterator a(p.G, r); a; ++a) {
                for (SpMat::InnerIterator b(p.G, r); b; ++b) {
                    hess(a.col(), b.col()) += d(r) * a.value() * b.value();
                }
            }
        }
        if (p.has_quadratic) {
            hess.noalias() += d(n_lin) * grad_q * grad_q.transpose();
            hess += (2.0 * lam(n_lin)) * p.Q;
        }
        const double reg = 1e-13 * (1.0 + hess.diagonal().cwiseAbs().maxCoeff());
        hess.diagonal().array() += reg;
        Eigen::LLT<Eigen::MatrixXd> llt(hess);
        if (llt.info() != Eigen::Success) break;
        Eigen::MatrixXd m_inv_at;
        Eigen::LLT<Eigen::MatrixXd> schur;
        if (n_eq > 0) {
            m_inv_at = llt.solve(p.A.transpose());
            schur.compute(p.A * m_inv_at);
            if (schur.info() != Eigen::Success) break;
        }

        auto jac_times = [&](const Eigen::VectorXd& v) {
            Eigen::VectorXd out(n_ineq);
            out.head(n_lin) = p.G * v;
            if (p.has_quadratic) out(n_lin) = grad_q.dot(v);
            return out;
        };
        auto jac_t_times = [&](const Eigen::VectorXd& v) {
            Eigen::VectorXd out = p.G.transpose() * v.head(n_lin);
            if (p.has_quadratic) out += v(n_lin) * grad_q;
            return out;
        };

        // Newton direction for a given complementarity target r_c.
        auto direction = [&](const Eigen::VectorXd& rc, Eigen::VectorXd& dx, Eigen::VectorXd& dz,
                             Eigen::VectorXd& dl, Eigen::VectorXd& dn) {
            const Eigen::VectorXd rhs = -rd - jac_t_times(d.cwiseProduct(rg) + rc.cwiseQuotient(z));
            const Eigen::VectorXd y = llt.solve(rhs);
            if (n_eq > 0) {
                dn = schur.solve(p.A * y + rp);
                dx = y - m_inv_at * dn;
            } else {
                dn.resize(0);
                dx = y;
            }
            dl = d.cwiseProduct(jac_times(dx) + rg) + rc.cwiseQuotient(z);
            dz = (rc - z.cwiseProduct(dl)).cwiseQuotient(lam);
        };

        Eigen::VectorXd dx, dz, dl, dn;
        direction(-lam.cwiseProduct(z), dx, dz, dl, dn);
        const double a_aff = std::min(max_step(z, dz), max_step(lam, dl));
        const double mu_aff = (z + a_aff * dz).dot(lam + a_aff * dl) / static_cast<double>(n_ineq);
        const double centering = std::pow(mu_aff / mu, 3.0);

        const Eigen::VectorXd rc =
            -lam.cwiseProduct(z) - dz.cwiseProduct(dl) + Eigen::VectorXd::Constant(n_ineq, centering * mu);
        direction(rc, dx, dz, dl, dn);
        const double alpha = std::min(1.0, 0.99 * std::min(max_step(z, dz), max_step(lam, dl)));
        x += alpha * dx;
        z += alpha * dz;
        lam += alpha * dl;
        if (n_eq > 0) nu += alpha * dn;
    }

    res.x = x;
    res.lambda = lam.head(n_lin);
    res.lambda_q = p.has_quadratic ? lam(n_lin) : 0.0;
    res.nu = nu;
    return res;
}

}  // namespace stratport::ipm
