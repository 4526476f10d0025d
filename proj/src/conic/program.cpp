#include "conic/program.hpp"

#include "errors.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>

// Problem file grammar (line based, '#' starts a comment, floats are %.17g so
// the round trip is exact):
//
//   socp 1
//   vars <n>
//   objective max <expr>
//   bounds <k>          followed by k lines: <var> <lb> <ub>   (inf / -inf ok)
//   eqs <k>             followed by k lines: <expr> = <rhs>
//   les <k>             followed by k lines: <expr> <= <rhs>
//   cones <k>           followed by k cone records:
//     soc <m>             then m lines: <expr>       (head row first)
//     rsoc <m>            then 2+m lines: a, b, then the m squared rows
//   end
//
//   <expr> := <nterms> { <var> <coef> }* <constant>
//
// Section headers are emitted even when their count is zero.

namespace irsuav::conic {

LinExpr& LinExpr::add(int var, double coef) {
    for (auto& t : terms) {
        if (t.var == var) {
            t.coef += coef;
            return *this;
        }
    }
    terms.push_back({var, coef});
    return *this;
}

LinExpr& LinExpr::operator+=(const LinExpr& o) {
    for (const auto& t : o.terms) add(t.var, t.coef);
    constant += o.constant;
    return *this;
}

LinExpr& LinExpr::operator*=(double k) {
    for (auto& t : terms) t.coef *= k;
    constant *= k;
    return *this;
}

LinExpr LinExpr::of(int var, double coef) {
    LinExpr e;
    e.terms.push_back({var, coef});
    return e;
}

double LinExpr::eval(const std::vector<double>& x) const {
    double v = constant;
    for (const auto& t : terms) v += t.coef * x[static_cast<size_t>(t.var)];
    return v;
}

void Program::check_expr(const LinExpr& e, const char* where) const {
    for (const auto& t : e.terms) {
        if (t.var < 0 || t.var >= num_vars())
            throw Error(ErrorCode::BadParameter,
                        std::string(where) + ": variable index out of range");
        if (!std::isfinite(t.coef))
            throw Error(ErrorCode::BadParameter,
                        std::string(where) + ": non-finite coefficient");
    }
    if (!std::isfinite(e.constant))
        throw Error(ErrorCode::BadParameter,
                    std::string(where) + ": non-finite constant");
}

int Program::add_var() {
    bounds_.push_back({});
    return num_vars() - 1;
}

int Program::add_var(double lb, double ub) {
    if (lb > ub)
        throw Error(ErrorCode::BadParameter, "add_var: lb > ub");
    bounds_.push_back({lb, ub});
    return num_vars() - 1;
}

void Program::set_lower(int v, double lb) {
    if (v < 0 || v >= num_vars())
        throw Error(ErrorCode::BadParameter, "set_lower: bad variable");
    bounds_[static_cast<size_t>(v)].lb = lb;
}

void Program::set_upper(int v, double ub) {
    if (v < 0 || v >= num_vars())
        throw Error(ErrorCode::BadParameter, "set_upper: bad variable");
    bounds_[static_cast<size_t>(v)].ub = ub;
}

void Program::maximize(LinExpr objective) {
    check_expr(objective, "maximize");
    objective_ = std::move(objective);
}

double Program::objective_value(const std::vector<double>& x) const {
    return objective_.eval(x);
}

void Program::add_eq(LinExpr e, double rhs) {
    check_expr(e, "add_eq");
    eqs_.push_back({std::move(e), rhs});
}

void Program::add_le(LinExpr e, double rhs) {
    check_expr(e, "add_le");
    les_.push_back({std::move(e), rhs});
}

void Program::add_ge(LinExpr e, double rhs) {
    check_expr(e, "add_ge");
    e *= -1.0;
    les_.push_back({std::move(e), -rhs});
}

void Program::add_soc(std::vector<LinExpr> rows) {
    if (rows.empty())
        throw Error(ErrorCode::BadParameter, "add_soc: empty cone");
    for (const auto& r : rows) check_expr(r, "add_soc");
    cones_.push_back(SocBlock{std::move(rows)});
}

void Program::add_rsoc(LinExpr a, LinExpr b, std::vector<LinExpr> xs) {
    check_expr(a, "add_rsoc");
    check_expr(b, "add_rsoc");
    for (const auto& r : xs) check_expr(r, "add_rsoc");
    cones_.push_back(RsocBlock{std::move(a), std::move(b), std::move(xs)});
}

void Program::add_quadratic_le(std::vector<LinExpr> squares, LinExpr bound) {
    // sum squares^2 <= bound  <=>  2 * bound * (1/2) >= sum squares^2
    add_rsoc(std::move(bound), LinExpr(0.5), std::move(squares));
}

namespace {

void append_row(std::vector<Eigen::Triplet<double>>& trips, int row,
                const LinExpr& e, double sign) {
    for (const auto& t : e.terms)
        if (t.coef != 0.0) trips.emplace_back(row, t.var, sign * t.coef);
}

}  // namespace

StandardForm Program::standard_form() const {
    StandardForm sf;
    sf.n = num_vars();

    sf.c = Eigen::VectorXd::Zero(sf.n);
    for (const auto& t : objective_.terms) sf.c[t.var] -= t.coef;  // max -> min

    // Equalities
    {
        std::vector<Eigen::Triplet<double>> trips;
        sf.b.resize(static_cast<Eigen::Index>(eqs_.size()));
        int r = 0;
        for (const auto& row : eqs_) {
            append_row(trips, r, row.e, 1.0);
            sf.b[r] = row.rhs - row.e.constant;
            ++r;
        }
        sf.A.resize(r, sf.n);
        sf.A.setFromTriplets(trips.begin(), trips.end());
    }

    // Inequalities and cones: G x + s = h, s in K. A cone row holds an affine
    // expression e(x) = const + coefs'x that must sit in the cone slot, so the
    // G entries are the negated coefficients and h carries the constant.
    std::vector<Eigen::Triplet<double>> trips;
    std::vector<double> h;
    int r = 0;

    auto lp_row_le = [&](const LinExpr& e, double rhs) {
        append_row(trips, r, e, 1.0);
        h.push_back(rhs - e.constant);
        ++r;
    };
    auto cone_row = [&](const LinExpr& e) {
        append_row(trips, r, e, -1.0);
        h.push_back(e.constant);
        ++r;
    };

    for (int v = 0; v < sf.n; ++v) {
        const auto& bd = bounds_[static_cast<size_t>(v)];
        if (std::isfinite(bd.lb)) lp_row_le(LinExpr::of(v, -1.0), -bd.lb);
        if (std::isfinite(bd.ub)) lp_row_le(LinExpr::of(v, 1.0), bd.ub);
    }
    for (const auto& row : les_) lp_row_le(row.e, row.rhs);

    // One-row cones are plain nonnegativity: fold them into the LP block.
    for (const auto& cb : cones_) {
        if (const auto* soc = std::get_if<SocBlock>(&cb)) {
            if (soc->rows.size() == 1) {
                LinExpr e = soc->rows[0];
                e *= -1.0;
                lp_row_le(e, 0.0);  // rows[0] >= 0
            }
        }
    }

    if (r == 0) {
        // The embedding needs a nonempty cone; 0'x <= 1 is always slack.
        h.push_back(1.0);
        ++r;
    }
    sf.n_lp = r;

    const double rt2 = std::sqrt(2.0);
    for (const auto& cb : cones_) {
        if (const auto* soc = std::get_if<SocBlock>(&cb)) {
            if (soc->rows.size() == 1) continue;  // folded above
            for (const auto& e : soc->rows) cone_row(e);
            sf.soc_dims.push_back(static_cast<int>(soc->rows.size()));
        } else {
            const auto& rc = std::get<RsocBlock>(cb);
            // 2ab >= |x|^2, a,b >= 0  <=>  (a+b, a-b, sqrt(2)x) in SOC
            LinExpr head = rc.a;
            head += rc.b;
            LinExpr diff = rc.a;
            LinExpr nb = rc.b;
            nb *= -1.0;
            diff += nb;
            cone_row(head);
            cone_row(diff);
            for (const auto& e : rc.xs) {
                LinExpr s = e;
                s *= rt2;
                cone_row(s);
            }
            sf.soc_dims.push_back(static_cast<int>(rc.xs.size()) + 2);
        }
    }

    sf.G.resize(r, sf.n);
    sf.G.setFromTriplets(trips.begin(), trips.end());
    sf.h = Eigen::Map<Eigen::VectorXd>(h.data(), static_cast<Eigen::Index>(h.size()));
    return sf;
}

// ---------------------------------------------------------------------------
// Text round trip

namespace {

std::string fmt_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_expr(std::string& out, const LinExpr& e) {
    out += std::to_string(e.terms.size());
    for (const auto& t : e.terms) {
        out += ' ';
        out += std::to_string(t.var);
        out += ' ';
        out += fmt_double(t.coef);
    }
    out += ' ';
    out += fmt_double(e.constant);
}

class Reader {
public:
    explicit Reader(const std::string& text) : in_(text) {}

    // Next non-empty, non-comment line split into tokens.
    bool next(std::vector<std::string>& toks) {
        std::string line;
        while (std::getline(in_, line)) {
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            std::istringstream ls(line);
            toks.clear();
            std::string t;
            while (ls >> t) toks.push_back(t);
            if (!toks.empty()) return true;
        }
        return false;
    }

    std::vector<std::string> expect(const char* head) {
        std::vector<std::string> toks;
        if (!next(toks) || toks[0] != head)
            throw Error(ErrorCode::IoError,
                        std::string("problem file: expected '") + head + "'");
        return toks;
    }

private:
    std::istringstream in_;
};

double parse_double(const std::string& s) {
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size())
        throw Error(ErrorCode::IoError, "problem file: bad float '" + s + "'");
    return v;
}

LinExpr parse_expr(const std::vector<std::string>& toks, size_t from) {
    if (from >= toks.size())
        throw Error(ErrorCode::IoError, "problem file: truncated expression");
    const size_t nterms = std::stoul(toks[from]);
    if (toks.size() < from + 1 + 2 * nterms + 1)
        throw Error(ErrorCode::IoError, "problem file: truncated expression");
    LinExpr e;
    size_t i = from + 1;
    for (size_t t = 0; t < nterms; ++t) {
        const int var = std::stoi(toks[i]);
        const double coef = parse_double(toks[i + 1]);
        e.terms.push_back({var, coef});
        i += 2;
    }
    e.constant = parse_double(toks[i]);
    return e;
}

}  // namespace

std::string Program::export_text() const {
    std::string out;
    out += "socp 1\n";
    out += "vars " + std::to_string(num_vars()) + "\n";
    out += "objective max ";
    write_expr(out, objective_);
    out += '\n';

    size_t nbounds = 0;
    for (const auto& bd : bounds_)
        if (std::isfinite(bd.lb) || std::isfinite(bd.ub)) ++nbounds;
    out += "bounds " + std::to_string(nbounds) + "\n";
    for (int v = 0; v < num_vars(); ++v) {
        const auto& bd = bounds_[static_cast<size_t>(v)];
        if (!std::isfinite(bd.lb) && !std::isfinite(bd.ub)) continue;
        out += std::to_string(v) + " " + fmt_double(bd.lb) + " " + fmt_double(bd.ub) + "\n";
    }

    out += "eqs " + std::to_string(eqs_.size()) + "\n";
    for (const auto& row : eqs_) {
        write_expr(out, row.e);
        out += " = " + fmt_double(row.rhs) + "\n";
    }
    out += "les " + std::to_string(les_.size()) + "\n";
    for (const auto& row : les_) {
        write_expr(out, row.e);
        out += " <= " + fmt_double(row.rhs) + "\n";
    }

    out += "cones " + std::to_string(cones_.size()) + "\n";
    for (const auto& cb : cones_) {
        if (const auto* soc = std::get_if<SocBlock>(&cb)) {
            out += "soc " + std::to_string(soc->rows.size()) + "\n";
            for (const auto& e : soc->rows) {
                write_expr(out, e);
                out += '\n';
            }
        } else {
            const auto& rc = std::get<RsocBlock>(cb);
            out += "rsoc " + std::to_string(rc.xs.size()) + "\n";
            write_expr(out, rc.a);
            out += '\n';
            write_expr(out, rc.b);
            out += '\n';
            for (const auto& e : rc.xs) {
                write_expr(out, e);
                out += '\n';
            }
        }
    }
    out += "end\n";
    return out;
}

Program Program::parse_text(const std::string& text) {
    Reader rd(text);
    auto toks = rd.expect("socp");
    if (toks.size() != 2 || toks[1] != "1")
        throw Error(ErrorCode::IoError, "problem file: unsupported version");

    Program p;
    toks = rd.expect("vars");
    const int n = std::stoi(toks.at(1));
    for (int i = 0; i < n; ++i) p.add_var();

    toks = rd.expect("objective");
    if (toks.size() < 3 || toks[1] != "max")
        throw Error(ErrorCode::IoError, "problem file: bad objective");
    p.maximize(parse_expr(toks, 2));

    toks = rd.expect("bounds");
    {
        const size_t k = std::stoul(toks.at(1));
        for (size_t i = 0; i < k; ++i) {
            if (!rd.next(toks) || toks.size() != 3)
                throw Error(ErrorCode::IoError, "problem file: bad bound row");
            const int v = std::stoi(toks[0]);
            p.set_lower(v, parse_double(toks[1]));
            p.set_upper(v, parse_double(toks[2]));
        }
    }

    toks = rd.expect("eqs");
    {
        const size_t k = std::stoul(toks.at(1));
        for (size_t i = 0; i < k; ++i) {
            if (!rd.next(toks))
                throw Error(ErrorCode::IoError, "problem file: truncated eqs");
            if (toks.size() < 3 || toks[toks.size() - 2] != "=")
                throw Error(ErrorCode::IoError, "problem file: bad eq row");
            const double rhs = parse_double(toks.back());
            toks.resize(toks.size() - 2);
            p.add_eq(parse_expr(toks, 0), rhs);
        }
    }

    toks = rd.expect("les");
    {
        const size_t k = std::stoul(toks.at(1));
        for (size_t i = 0; i < k; ++i) {
            if (!rd.next(toks))
                throw Error(ErrorCode::IoError, "problem file: truncated les");
            if (toks.size() < 3 || toks[toks.size() - 2] != "<=")
                throw Error(ErrorCode::IoError, "problem file: bad le row");
            const double rhs = parse_double(toks.back());
            toks.resize(toks.size() - 2);
            p.add_le(parse_expr(toks, 0), rhs);
        }
    }

    toks = rd.expect("cones");
    {
        const size_t k = std::stoul(toks.at(1));
        for (size_t i = 0; i < k; ++i) {
            if (!rd.next(toks) || toks.size() != 2)
                throw Error(ErrorCode::IoError, "problem file: bad cone header");
            const size_t m = std::stoul(toks[1]);
            std::vector<std::string> row;
            if (toks[0] == "soc") {
                std::vector<LinExpr> rows;
                for (size_t j = 0; j < m; ++j) {
                    if (!rd.next(row))
                        throw Error(ErrorCode::IoError, "problem file: truncated cone");
                    rows.push_back(parse_expr(row, 0));
                }
                p.add_soc(std::move(rows));
            } else if (toks[0] == "rsoc") {
                if (!rd.next(row))
                    throw Error(ErrorCode::IoError, "problem file: truncated cone");
                LinExpr a = parse_expr(row, 0);
                if (!rd.next(row))
                    throw Error(ErrorCode::IoError, "problem file: truncated cone");
                LinExpr b = parse_expr(row, 0);
                std::vector<LinExpr> xs;
                for (size_t j = 0; j < m; ++j) {
                    if (!rd.next(row))
                        throw Error(ErrorCode::IoError, "problem file: truncated cone");
                    xs.push_back(parse_expr(row, 0));
                }
                p.add_rsoc(std::move(a), std::move(b), std::move(xs));
            } else {
                throw Error(ErrorCode::IoError,
                            "problem file: unknown cone kind '" + toks[0] + "'");
            }
        }
    }

    rd.expect("end");
    return p;
}

}  // namespace irsuav::conic
