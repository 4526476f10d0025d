#pragma once

// Conic program container with a linear objective (maximize), linear
// equality/inequality rows, and second-order cone blocks (standard and
// rotated). Convex quadratic rows are lowered to rotated cones as they are
// added, so by solve time only linear rows and cone blocks remain.

#include <Eigen/Sparse>
#include <Eigen/Dense>

#include <limits>
#include <string>
#include <variant>
#include <vector>

namespace irsuav::conic {

struct LinTerm {
    int var = 0;
    double coef = 0.0;
};

// sum_i coef_i * x[var_i] + constant
struct LinExpr {
    std::vector<LinTerm> terms;
    double constant = 0.0;

    LinExpr() = default;
    explicit LinExpr(double c) : constant(c) {}

    // Appends (or merges into) the coefficient of a variable.
    LinExpr& add(int var, double coef);
    LinExpr& operator+=(const LinExpr& o);
    LinExpr& operator*=(double k);

    static LinExpr of(int var, double coef = 1.0);

    double eval(const std::vector<double>& x) const;
};

// rows[0] >= norm2(rows[1..])
struct SocBlock {
    std::vector<LinExpr> rows;
};

// 2*a*b >= sum_i xs[i]^2, a >= 0, b >= 0
struct RsocBlock {
    LinExpr a, b;
    std::vector<LinExpr> xs;
};

using ConeBlock = std::variant<SocBlock, RsocBlock>;

struct VarBound {
    double lb = -std::numeric_limits<double>::infinity();
    double ub = std::numeric_limits<double>::infinity();
};

struct LinRow {
    LinExpr e;
    double rhs = 0.0;
};

// Standard embedding used by the interior-point backend:
//   minimize c'x  s.t.  A x = b,  G x + s = h,  s in (R+)^n_lp x SOC(d1) x ...
struct StandardForm {
    int n = 0;
    Eigen::VectorXd c;
    Eigen::SparseMatrix<double> A;
    Eigen::VectorXd b;
    Eigen::SparseMatrix<double> G;
    Eigen::VectorXd h;
    int n_lp = 0;
    std::vector<int> soc_dims;
};

class Program {
public:
    // Variables
    int add_var();                         // free
    int add_var(double lb, double ub);
    void set_lower(int v, double lb);
    void set_upper(int v, double ub);
    int num_vars() const { return static_cast<int>(bounds_.size()); }
    const std::vector<VarBound>& bounds() const { return bounds_; }

    // Objective (always a maximization; negate coefficients to minimize)
    void maximize(LinExpr objective);
    const LinExpr& objective() const { return objective_; }
    double objective_value(const std::vector<double>& x) const;

    // Rows
    void add_eq(LinExpr e, double rhs);
    void add_le(LinExpr e, double rhs);
    void add_ge(LinExpr e, double rhs);    // stored as -e <= -rhs
    void add_soc(std::vector<LinExpr> rows);
    void add_rsoc(LinExpr a, LinExpr b, std::vector<LinExpr> xs);
    // sum_i squares[i](x)^2 <= bound(x); lowered to a rotated cone immediately
    void add_quadratic_le(std::vector<LinExpr> squares, LinExpr bound);

    const std::vector<LinRow>& eq_rows() const { return eqs_; }
    const std::vector<LinRow>& le_rows() const { return les_; }
    const std::vector<ConeBlock>& cones() const { return cones_; }

    // Deterministic assembly: bound rows (var order, lower then upper), then
    // inequality rows in insertion order, then degenerate one-row cones, then
    // cone blocks in insertion order (rotated cones expanded to standard ones).
    StandardForm standard_form() const;

    // Lossless text round-trip; see grammar notes in program.cpp.
    std::string export_text() const;
    static Program parse_text(const std::string& text);

private:
    std::vector<VarBound> bounds_;
    LinExpr objective_;
    std::vector<LinRow> eqs_;
    std::vector<LinRow> les_;
    std::vector<ConeBlock> cones_;

    void check_expr(const LinExpr& e, const char* where) const;
};

}  // namespace irsuav::conic
