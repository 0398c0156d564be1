#include "skoro/formula.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>

namespace skoro {

Rel negate_rel(Rel r) {
    switch (r) {
        case Rel::le: return Rel::gt;
        case Rel::lt: return Rel::ge;
        case Rel::ge: return Rel::lt;
        case Rel::gt: return Rel::le;
    }
    return Rel::le;
}

std::string rel_to_string(Rel r) {
    switch (r) {
        case Rel::le: return "<=";
        case Rel::lt: return "<";
        case Rel::ge: return ">=";
        case Rel::gt: return ">";
    }
    return "<=";
}

// ---------------------------------------------------------------------------
// Poly

std::vector<std::string> Poly::variables() const {
    std::set<std::string> seen;
    for (const auto& [v, c] : linear)
        if (c != 0) seen.insert(v);
    for (const auto& [p, c] : quad)
        if (c != 0) {
            seen.insert(p.first);
            seen.insert(p.second);
        }
    return {seen.begin(), seen.end()};
}

double Poly::evaluate(const std::map<std::string, double>& env) const {
    double acc = constant;
    for (const auto& [v, c] : linear) {
        auto it = env.find(v);
        if (it == env.end()) throw std::invalid_argument("unbound variable " + v);
        acc += c * it->second;
    }
    for (const auto& [p, c] : quad) {
        auto i1 = env.find(p.first), i2 = env.find(p.second);
        if (i1 == env.end() || i2 == env.end())
            throw std::invalid_argument("unbound variable in quadratic term");
        acc += c * i1->second * i2->second;
    }
    return acc;
}

Poly& Poly::operator+=(const Poly& o) {
    constant += o.constant;
    for (const auto& [v, c] : o.linear)
        if ((linear[v] += c) == 0) linear.erase(v);
    for (const auto& [p, c] : o.quad)
        if ((quad[p] += c) == 0) quad.erase(p);
    return *this;
}

Poly& Poly::operator-=(const Poly& o) {
    Poly neg = o;
    neg *= -1.0;
    return *this += neg;
}

Poly& Poly::operator*=(double s) {
    constant *= s;
    for (auto it = linear.begin(); it != linear.end();) {
        it->second *= s;
        it = it->second == 0 ? linear.erase(it) : std::next(it);
    }
    for (auto it = quad.begin(); it != quad.end();) {
        it->second *= s;
        it = it->second == 0 ? quad.erase(it) : std::next(it);
    }
    return *this;
}

Poly Poly::var(const std::string& name) {
    Poly p;
    p.linear[name] = 1.0;
    return p;
}

Poly Poly::number(double c) {
    Poly p;
    p.constant = c;
    return p;
}

Poly Poly::mul(const Poly& a, const Poly& b) {
    if (!a.quad.empty() && (!b.quad.empty() || !b.linear.empty()))
        throw std::invalid_argument("polynomial degree exceeds 2");
    if (!b.quad.empty() && !a.linear.empty())
        throw std::invalid_argument("polynomial degree exceeds 2");
    Poly out;
    out.constant = a.constant * b.constant;
    for (const auto& [v, c] : a.linear)
        if (double s = c * b.constant; s != 0) out.linear[v] += s;
    for (const auto& [v, c] : b.linear)
        if (double s = c * a.constant; s != 0) out.linear[v] += s;
    for (const auto& [p, c] : a.quad)
        if (double s = c * b.constant; s != 0) out.quad[p] += s;
    for (const auto& [p, c] : b.quad)
        if (double s = c * a.constant; s != 0) out.quad[p] += s;
    for (const auto& [va, ca] : a.linear)
        for (const auto& [vb, cb] : b.linear) {
            double s = ca * cb;
            if (s == 0) continue;
            auto key = va <= vb ? std::pair(va, vb) : std::pair(vb, va);
            out.quad[key] += s;
        }
    std::erase_if(out.linear, [](const auto& kv) { return kv.second == 0; });
    std::erase_if(out.quad, [](const auto& kv) { return kv.second == 0; });
    return out;
}

bool Poly::operator==(const Poly& o) const {
    if (constant != o.constant) return false;
    auto covered = [](const auto& a, const auto& b) {
        for (const auto& [k, c] : a) {
            if (c == 0) continue;
            auto it = b.find(k);
            if (it == b.end() || it->second != c) return false;
        }
        return true;
    };
    return covered(linear, o.linear) && covered(o.linear, linear) &&
           covered(quad, o.quad) && covered(o.quad, quad);
}

bool is_signal_variable(const std::string& name) {
    if (name.size() < 2 || name[0] != 's') return false;
    return std::all_of(name.begin() + 1, name.end(),
                       [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

std::size_t signal_index(const std::string& name) {
    return static_cast<std::size_t>(std::strtoull(name.c_str() + 1, nullptr, 10));
}

// ---------------------------------------------------------------------------
// Formula factories

namespace {
FormulaPtr node(FormulaKind k) {
    auto f = std::make_shared<Formula>();
    f->kind = k;
    return f;
}
}  // namespace

FormulaPtr Formula::make_true() { return node(FormulaKind::True); }
FormulaPtr Formula::make_false() { return node(FormulaKind::False); }

FormulaPtr Formula::prop(std::string name) {
    auto f = std::make_shared<Formula>();
    f->kind = FormulaKind::Prop;
    f->name = std::move(name);
    return f;
}

FormulaPtr Formula::negation(FormulaPtr x) {
    auto f = std::make_shared<Formula>();
    f->kind = FormulaKind::Not;
    f->left = std::move(x);
    return f;
}

FormulaPtr Formula::conj(FormulaPtr a, FormulaPtr b) {
    auto f = std::make_shared<Formula>();
    f->kind = FormulaKind::And;
    f->left = std::move(a);
    f->right = std::move(b);
    return f;
}

FormulaPtr Formula::disj(FormulaPtr a, FormulaPtr b) {
    auto f = std::make_shared<Formula>();
    f->kind = FormulaKind::Or;
    f->left = std::move(a);
    f->right = std::move(b);
    return f;
}

FormulaPtr Formula::until(FormulaPtr a, FormulaPtr b) {
    auto f = std::make_shared<Formula>();
    f->kind = FormulaKind::Until;
    f->left = std::move(a);
    f->right = std::move(b);
    return f;
}

FormulaPtr Formula::waiting_for(FormulaPtr a, FormulaPtr b) {
    auto f = std::make_shared<Formula>();
    f->kind = FormulaKind::WaitingFor;
    f->left = std::move(a);
    f->right = std::move(b);
    return f;
}

FormulaPtr Formula::freeze(std::string var, FormulaPtr body) {
    auto f = std::make_shared<Formula>();
    f->kind = FormulaKind::Freeze;
    f->name = std::move(var);
    f->left = std::move(body);
    return f;
}

FormulaPtr Formula::time_constraint(Constraint c) {
    auto f = std::make_shared<Formula>();
    f->kind = FormulaKind::TimeConstraint;
    f->constraint = std::move(c);
    return f;
}

FormulaPtr Formula::signal_constraint(Constraint c) {
    auto f = std::make_shared<Formula>();
    f->kind = FormulaKind::SignalConstraint;
    f->constraint = std::move(c);
    return f;
}

// ---------------------------------------------------------------------------
// Lexer

ParseError::ParseError(const std::string& msg, std::size_t pos)
    : std::runtime_error(msg + " (at offset " + std::to_string(pos) + ")"), pos_(pos) {}

namespace {

enum class Tok {
    End, Ident, Number, LParen, RParen, LBracket, RBracket, Comma, Colon, Dot,
    Bang, Amp, Pipe, Arrow, Plus, Minus, Star, Slash, Caret, Le, Lt, Ge, Gt,
};

struct Token {
    Tok kind;
    std::string text;
    double number = 0;
    std::size_t pos = 0;
};

std::vector<Token> lex(std::string_view src) {
    std::vector<Token> out;
    std::size_t i = 0;
    auto push = [&](Tok k, std::size_t pos, std::string text = "") {
        out.push_back({k, std::move(text), 0, pos});
    };
    while (i < src.size()) {
        char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        std::size_t start = i;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (i < src.size() &&
                   (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_'))
                ++i;
            push(Tok::Ident, start, std::string(src.substr(start, i - start)));
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            while (i < src.size() && (std::isdigit(static_cast<unsigned char>(src[i])) ||
                                      src[i] == '.'))
                ++i;
            if (i < src.size() && (src[i] == 'e' || src[i] == 'E')) {
                std::size_t j = i + 1;
                if (j < src.size() && (src[j] == '+' || src[j] == '-')) ++j;
                if (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) {
                    i = j;
                    while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i])))
                        ++i;
                }
            }
            Token t{Tok::Number, std::string(src.substr(start, i - start)), 0, start};
            char* end = nullptr;
            t.number = std::strtod(t.text.c_str(), &end);
            if (end != t.text.c_str() + t.text.size())
                throw ParseError("bad number '" + t.text + "'", start);
            out.push_back(std::move(t));
            continue;
        }
        ++i;
        switch (c) {
            case '(': push(Tok::LParen, start); break;
            case ')': push(Tok::RParen, start); break;
            case '[': push(Tok::LBracket, start); break;
            case ']': push(Tok::RBracket, start); break;
            case ',': push(Tok::Comma, start); break;
            case ':': push(Tok::Colon, start); break;
            case '.': push(Tok::Dot, start); break;
            case '!': push(Tok::Bang, start); break;
            case '&': push(Tok::Amp, start); break;
            case '|': push(Tok::Pipe, start); break;
            case '+': push(Tok::Plus, start); break;
            case '*': push(Tok::Star, start); break;
            case '/': push(Tok::Slash, start); break;
            case '^': push(Tok::Caret, start); break;
            case '-':
                if (i < src.size() && src[i] == '>') {
                    ++i;
                    push(Tok::Arrow, start);
                } else {
                    push(Tok::Minus, start);
                }
                break;
            case '<':
                if (i < src.size() && src[i] == '=') {
                    ++i;
                    push(Tok::Le, start);
                } else {
                    push(Tok::Lt, start);
                }
                break;
            case '>':
                if (i < src.size() && src[i] == '=') {
                    ++i;
                    push(Tok::Ge, start);
                } else {
                    push(Tok::Gt, start);
                }
                break;
            default:
                throw ParseError(std::string("unexpected character '") + c + "'", start);
        }
    }
    push(Tok::End, src.size());
    return out;
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
public:
    explicit Parser(std::string_view src) : toks_(lex(src)) {}

    FormulaPtr parse() {
        auto f = parse_formula_rec();
        expect(Tok::End, "trailing input after formula");
        return f;
    }

private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;

    const Token& peek(std::size_t ahead = 0) const {
        std::size_t k = pos_ + ahead;
        return toks_[k < toks_.size() ? k : toks_.size() - 1];
    }
    const Token& advance() { return toks_[pos_++]; }
    bool accept(Tok k) {
        if (peek().kind == k) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(Tok k, const std::string& what) {
        if (!accept(k)) throw ParseError("expected " + what, peek().pos);
    }
    bool ident_is(const std::string& s) const {
        return peek().kind == Tok::Ident && peek().text == s;
    }

    static bool reserved(const std::string& s) {
        return s == "U" || s == "W" || s == "F" || s == "G" || s == "true" ||
               s == "false";
    }
    static bool is_prop_name(const std::string& s) {
        return !s.empty() && std::isupper(static_cast<unsigned char>(s[0])) &&
               !reserved(s);
    }
    static bool is_var_name(const std::string& s) {
        return !s.empty() &&
               (std::islower(static_cast<unsigned char>(s[0])) || s[0] == '_') &&
               !reserved(s);
    }

    FormulaPtr parse_formula_rec() {  // "->", right associative
        auto lhs = parse_or();
        if (accept(Tok::Arrow)) {
            auto rhs = parse_formula_rec();
            return Formula::disj(Formula::negation(std::move(lhs)), std::move(rhs));
        }
        return lhs;
    }

    FormulaPtr parse_or() {
        auto lhs = parse_and();
        while (accept(Tok::Pipe)) lhs = Formula::disj(std::move(lhs), parse_and());
        return lhs;
    }

    FormulaPtr parse_and() {
        auto lhs = parse_until();
        while (accept(Tok::Amp)) lhs = Formula::conj(std::move(lhs), parse_until());
        return lhs;
    }

    FormulaPtr parse_until() {  // right associative
        auto lhs = parse_unary();
        if (ident_is("U")) {
            advance();
            if (peek().kind == Tok::LBracket) {
                auto [lo, hi] = parse_bounds();
                auto rhs = parse_until();
                return desugar_bounded_until(std::move(lhs), std::move(rhs), lo, hi);
            }
            return Formula::until(std::move(lhs), parse_until());
        }
        if (ident_is("W")) {
            advance();
            return Formula::waiting_for(std::move(lhs), parse_until());
        }
        return lhs;
    }

    std::pair<double, double> parse_bounds() {
        expect(Tok::LBracket, "'['");
        if (!ident_is("a")) throw ParseError("expected 'a' bound", peek().pos);
        advance();
        expect(Tok::Colon, "':'");
        double lo = parse_signed_number();
        expect(Tok::Comma, "','");
        if (!ident_is("b")) throw ParseError("expected 'b' bound", peek().pos);
        advance();
        expect(Tok::Colon, "':'");
        double hi = parse_signed_number();
        expect(Tok::RBracket, "']'");
        return {lo, hi};
    }

    double parse_signed_number() {
        double sign = accept(Tok::Minus) ? -1.0 : 1.0;
        if (peek().kind != Tok::Number) throw ParseError("expected number", peek().pos);
        return sign * advance().number;
    }

    FormulaPtr parse_unary() {
        if (accept(Tok::Bang)) return Formula::negation(parse_unary());
        if (ident_is("F")) {
            advance();
            return Formula::until(Formula::make_true(), parse_unary());
        }
        if (ident_is("G")) {
            // G phi == not (true U not phi)
            advance();
            return Formula::negation(Formula::until(
                Formula::make_true(), Formula::negation(parse_unary())));
        }
        if (peek().kind == Tok::Ident && is_var_name(peek().text) &&
            peek(1).kind == Tok::Dot) {
            std::string var = advance().text;
            advance();  // '.'
            return Formula::freeze(std::move(var), parse_unary());
        }
        return parse_atom();
    }

    FormulaPtr parse_atom() {
        if (ident_is("true")) {
            advance();
            return Formula::make_true();
        }
        if (ident_is("false")) {
            advance();
            return Formula::make_false();
        }
        if (auto c = try_constraint()) return *c;
        if (peek().kind == Tok::Ident && is_prop_name(peek().text))
            return Formula::prop(advance().text);
        if (accept(Tok::LParen)) {
            auto f = parse_formula_rec();
            expect(Tok::RParen, "')'");
            return f;
        }
        throw ParseError("expected formula atom", peek().pos);
    }

    // Constraint attempt with backtracking; returns nullopt when the token
    // stream is not "arith relop arith".
    std::optional<FormulaPtr> try_constraint() {
        std::size_t save = pos_;
        auto lhs = try_arith();
        if (!lhs) {
            pos_ = save;
            return std::nullopt;
        }
        Rel rel;
        switch (peek().kind) {
            case Tok::Le: rel = Rel::le; break;
            case Tok::Lt: rel = Rel::lt; break;
            case Tok::Ge: rel = Rel::ge; break;
            case Tok::Gt: rel = Rel::gt; break;
            default:
                pos_ = save;
                return std::nullopt;
        }
        std::size_t rel_pos = advance().pos;
        auto rhs = try_arith();
        if (!rhs) throw ParseError("expected arithmetic right-hand side", peek().pos);
        Poly p = *lhs;
        p -= *rhs;
        return make_constraint(std::move(p), rel, rel_pos);
    }

    FormulaPtr make_constraint(Poly p, Rel rel, std::size_t at) {
        bool any_signal = false, any_time = false;
        for (const auto& v : p.variables())
            (is_signal_variable(v) ? any_signal : any_time) = true;
        if (any_signal && any_time)
            throw ParseError("constraint mixes time and signal variables", at);
        Constraint c{std::move(p), rel};
        return any_signal ? Formula::signal_constraint(std::move(c))
                          : Formula::time_constraint(std::move(c));
    }

    std::optional<Poly> try_arith() {
        auto lhs = try_mul();
        if (!lhs) return std::nullopt;
        while (true) {
            if (accept(Tok::Plus)) {
                auto rhs = try_mul();
                if (!rhs) return std::nullopt;
                *lhs += *rhs;
            } else if (accept(Tok::Minus)) {
                auto rhs = try_mul();
                if (!rhs) return std::nullopt;
                *lhs -= *rhs;
            } else {
                return lhs;
            }
        }
    }

    std::optional<Poly> try_mul() {
        auto lhs = try_pow();
        if (!lhs) return std::nullopt;
        while (true) {
            if (accept(Tok::Star)) {
                auto rhs = try_pow();
                if (!rhs) return std::nullopt;
                *lhs = Poly::mul(*lhs, *rhs);
            } else if (accept(Tok::Slash)) {
                if (peek().kind != Tok::Number) return std::nullopt;
                double d = advance().number;
                if (d == 0) throw ParseError("division by zero", peek().pos);
                *lhs *= 1.0 / d;
            } else {
                return lhs;
            }
        }
    }

    std::optional<Poly> try_pow() {
        auto base = try_primary();
        if (!base) return std::nullopt;
        if (accept(Tok::Caret)) {
            if (peek().kind != Tok::Number) return std::nullopt;
            double e = advance().number;
            if (e == 1.0) return base;
            if (e == 2.0) return Poly::mul(*base, *base);
            throw ParseError("only exponents 1 and 2 are supported", peek().pos);
        }
        return base;
    }

    std::optional<Poly> try_primary() {
        if (peek().kind == Tok::Number) return Poly::number(advance().number);
        if (accept(Tok::Minus)) {
            auto inner = try_primary();
            if (!inner) return std::nullopt;
            *inner *= -1.0;
            return inner;
        }
        if (peek().kind == Tok::Ident) {
            const std::string& s = peek().text;
            if (is_var_name(s) || is_signal_variable(s)) {
                // A freeze binder ("x.") is not an arithmetic variable.
                if (peek(1).kind == Tok::Dot) return std::nullopt;
                return Poly::var(advance().text);
            }
            return std::nullopt;
        }
        if (accept(Tok::LParen)) {
            auto inner = try_arith();
            if (!inner || !accept(Tok::RParen)) return std::nullopt;
            return inner;
        }
        return std::nullopt;
    }

    FormulaPtr desugar_bounded_until(FormulaPtr lhs, FormulaPtr rhs, double lo,
                                     double hi) {
        auto [x, y] = fresh_vars(lhs, rhs);
        Poly base = Poly::var(y);
        base -= Poly::var(x);
        Poly p_hi = base;
        p_hi.constant -= hi;  // y - x - hi <= 0
        Poly p_lo = base;
        p_lo.constant -= lo;  // y - x - lo >= 0
        auto body = Formula::conj(
            Formula::conj(Formula::time_constraint({std::move(p_hi), Rel::le}),
                          Formula::time_constraint({std::move(p_lo), Rel::ge})),
            std::move(rhs));
        auto inner = Formula::freeze(y, std::move(body));
        return Formula::freeze(
            x, Formula::until(std::move(lhs), std::move(inner)));
    }

    static void collect_idents(const FormulaPtr& f, std::set<std::string>& out) {
        if (!f) return;
        if (f->kind == FormulaKind::Freeze) out.insert(f->name);
        if (f->kind == FormulaKind::TimeConstraint ||
            f->kind == FormulaKind::SignalConstraint)
            for (const auto& v : f->constraint.poly.variables()) out.insert(v);
        collect_idents(f->left, out);
        collect_idents(f->right, out);
    }

    std::pair<std::string, std::string> fresh_vars(const FormulaPtr& a,
                                                   const FormulaPtr& b) {
        std::set<std::string> used;
        collect_idents(a, used);
        collect_idents(b, used);
        auto pick = [&](const char* base) {
            if (!used.count(base)) {
                used.insert(base);
                return std::string(base);
            }
            for (int k = 1;; ++k) {
                std::string cand = base + std::to_string(k);
                if (!used.count(cand)) {
                    used.insert(cand);
                    return cand;
                }
            }
        };
        std::string x = pick("x");
        std::string y = pick("y");
        return {x, y};
    }
};

void check_no_rebinding(const FormulaPtr& f, std::set<std::string>& bound) {
    if (!f) return;
    if (f->kind == FormulaKind::Freeze) {
        if (!bound.insert(f->name).second)
            throw ParseError("rebinding of freeze variable '" + f->name + "'", 0);
        check_no_rebinding(f->left, bound);
        bound.erase(f->name);
        return;
    }
    check_no_rebinding(f->left, bound);
    check_no_rebinding(f->right, bound);
}

}  // namespace

FormulaPtr parse_formula(std::string_view text) {
    Parser p(text);
    auto f = p.parse();
    std::set<std::string> bound;
    check_no_rebinding(f, bound);
    return f;
}

// ---------------------------------------------------------------------------
// Printing

namespace {

std::string format_double(double v) {
    if (v == static_cast<long long>(v) && std::abs(v) < 1e15)
        return std::to_string(static_cast<long long>(v));
    for (int prec = 15; prec <= 17; ++prec) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    return "0";
}

std::string poly_to_string(const Poly& p) {
    std::ostringstream out;
    bool first = true;
    auto emit = [&](double coeff, const std::string& body) {
        if (coeff == 0) return;
        double mag = std::abs(coeff);
        if (first) {
            if (coeff < 0) out << "-";
            first = false;
        } else {
            out << (coeff < 0 ? " - " : " + ");
        }
        if (body.empty()) {
            out << format_double(mag);
        } else if (mag == 1.0) {
            out << body;
        } else {
            out << format_double(mag) << "*" << body;
        }
    };
    for (const auto& [pr, c] : p.quad)
        emit(c, pr.first == pr.second ? pr.first + "^2" : pr.first + "*" + pr.second);
    for (const auto& [v, c] : p.linear) emit(c, v);
    emit(p.constant, "");
    if (first) out << "0";
    return out.str();
}

// Precedence: atoms 0, unary 1, U/W 2, & 3, | 4.
int precedence(const FormulaPtr& f) {
    switch (f->kind) {
        case FormulaKind::Not:
        case FormulaKind::Freeze: return 1;
        case FormulaKind::Until:
        case FormulaKind::WaitingFor: return 2;
        case FormulaKind::And: return 3;
        case FormulaKind::Or: return 4;
        default: return 0;
    }
}

void print_rec(const FormulaPtr& f, std::ostringstream& out, int parent_prec) {
    int prec = precedence(f);
    bool parens = prec > parent_prec;
    if (parens) out << "(";
    switch (f->kind) {
        case FormulaKind::True: out << "true"; break;
        case FormulaKind::False: out << "false"; break;
        case FormulaKind::Prop: out << f->name; break;
        case FormulaKind::Not:
            out << "!";
            print_rec(f->left, out, 1);
            break;
        case FormulaKind::Freeze:
            out << f->name << ".";
            print_rec(f->left, out, 1);
            break;
        case FormulaKind::And:
            print_rec(f->left, out, 3);
            out << " & ";
            print_rec(f->right, out, 2);  // left associative
            break;
        case FormulaKind::Or:
            print_rec(f->left, out, 4);
            out << " | ";
            print_rec(f->right, out, 3);
            break;
        case FormulaKind::Until:
            print_rec(f->left, out, 1);
            out << " U ";
            print_rec(f->right, out, 2);  // right associative
            break;
        case FormulaKind::WaitingFor:
            print_rec(f->left, out, 1);
            out << " W ";
            print_rec(f->right, out, 2);
            break;
        case FormulaKind::TimeConstraint:
        case FormulaKind::SignalConstraint:
            out << poly_to_string(f->constraint.poly) << " "
                << rel_to_string(f->constraint.rel) << " 0";
            break;
    }
    if (parens) out << ")";
}

}  // namespace

std::string to_string(const FormulaPtr& f) {
    std::ostringstream out;
    print_rec(f, out, 5);
    return out.str();
}

// ---------------------------------------------------------------------------
// Negation-normal form

namespace {

FormulaPtr nnf_rec(const FormulaPtr& f, bool neg) {
    switch (f->kind) {
        case FormulaKind::True:
            return neg ? Formula::make_false() : Formula::make_true();
        case FormulaKind::False:
            return neg ? Formula::make_true() : Formula::make_false();
        case FormulaKind::Prop:
            return neg ? Formula::negation(f) : f;
        case FormulaKind::Not:
            return nnf_rec(f->left, !neg);
        case FormulaKind::And:
            return neg ? Formula::disj(nnf_rec(f->left, true), nnf_rec(f->right, true))
                       : Formula::conj(nnf_rec(f->left, false), nnf_rec(f->right, false));
        case FormulaKind::Or:
            return neg ? Formula::conj(nnf_rec(f->left, true), nnf_rec(f->right, true))
                       : Formula::disj(nnf_rec(f->left, false), nnf_rec(f->right, false));
        case FormulaKind::Until:
            if (neg)
                return Formula::waiting_for(
                    nnf_rec(f->right, true),
                    Formula::conj(nnf_rec(f->left, true), nnf_rec(f->right, true)));
            return Formula::until(nnf_rec(f->left, false), nnf_rec(f->right, false));
        case FormulaKind::WaitingFor:
            if (neg)
                return Formula::until(
                    nnf_rec(f->right, true),
                    Formula::conj(nnf_rec(f->left, true), nnf_rec(f->right, true)));
            return Formula::waiting_for(nnf_rec(f->left, false), nnf_rec(f->right, false));
        case FormulaKind::Freeze:
            return Formula::freeze(f->name, nnf_rec(f->left, neg));
        case FormulaKind::TimeConstraint:
        case FormulaKind::SignalConstraint: {
            if (!neg) return f;
            Constraint c = f->constraint;
            c.rel = negate_rel(c.rel);
            return f->kind == FormulaKind::TimeConstraint
                       ? Formula::time_constraint(std::move(c))
                       : Formula::signal_constraint(std::move(c));
        }
    }
    return f;
}

}  // namespace

FormulaPtr to_nnf(const FormulaPtr& f) { return nnf_rec(f, false); }

bool is_nnf(const FormulaPtr& f) {
    if (!f) return true;
    if (f->kind == FormulaKind::Not) return f->left->kind == FormulaKind::Prop;
    return is_nnf(f->left) && is_nnf(f->right);
}

bool structural_equal(const FormulaPtr& a, const FormulaPtr& b) {
    if (!a || !b) return a == b;
    if (a->kind != b->kind || a->name != b->name) return false;
    if (a->kind == FormulaKind::TimeConstraint ||
        a->kind == FormulaKind::SignalConstraint) {
        if (!(a->constraint == b->constraint)) return false;
    }
    return structural_equal(a->left, b->left) && structural_equal(a->right, b->right);
}

namespace {

void free_vars_rec(const FormulaPtr& f, std::set<std::string>& bound,
                   std::vector<std::string>& out) {
    if (!f) return;
    if (f->kind == FormulaKind::Freeze) {
        bool fresh = bound.insert(f->name).second;
        free_vars_rec(f->left, bound, out);
        if (fresh) bound.erase(f->name);
        return;
    }
    if (f->kind == FormulaKind::TimeConstraint) {
        for (const auto& v : f->constraint.poly.variables())
            if (!bound.count(v) && std::find(out.begin(), out.end(), v) == out.end())
                out.push_back(v);
    }
    free_vars_rec(f->left, bound, out);
    free_vars_rec(f->right, bound, out);
}

}  // namespace

std::vector<std::string> free_time_variables(const FormulaPtr& f) {
    std::set<std::string> bound;
    std::vector<std::string> out;
    free_vars_rec(f, bound, out);
    return out;
}

int max_signal_index(const FormulaPtr& f) {
    if (!f) return -1;
    int best = -1;
    if (f->kind == FormulaKind::SignalConstraint)
        for (const auto& v : f->constraint.poly.variables())
            best = std::max(best, static_cast<int>(signal_index(v)));
    best = std::max(best, max_signal_index(f->left));
    best = std::max(best, max_signal_index(f->right));
    return best;
}

void collect_constraints(const FormulaPtr& f, std::vector<const Formula*>& out) {
    if (!f) return;
    if (f->kind == FormulaKind::TimeConstraint ||
        f->kind == FormulaKind::SignalConstraint)
        out.push_back(f.get());
    collect_constraints(f->left, out);
    collect_constraints(f->right, out);
}

ConstraintFn ConstraintFn::from_poly(const Poly& p) {
    ConstraintFn f;
    f.kind = p.is_affine() ? Kind::affine : Kind::quadratic;
    f.vars = p.variables();
    f.poly = p;
    return f;
}

ConstraintFn ConstraintFn::blackbox(std::vector<std::string> vars,
                                    std::function<double(std::span<const double>)> fn,
                                    double lipschitz) {
    if (lipschitz < 0) throw std::invalid_argument("Lipschitz constant must be >= 0");
    ConstraintFn f;
    f.kind = Kind::blackbox;
    f.vars = std::move(vars);
    f.fn = std::move(fn);
    f.lipschitz = lipschitz;
    return f;
}

}  // namespace skoro
