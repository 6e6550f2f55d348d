#include "lyapset/expr.h"

#include <algorithm>
#include <array>
#include <charconv>
#include <cctype>
#include <cmath>
#include <numbers>

namespace lyapset {

struct Expr::Node {
  ExprKind kind = ExprKind::kConstant;
  int op = 0;
  double value = 0.0;
  int variable = 0;
  std::vector<Expr> children;
  int max_variable = 0;
  std::size_t count = 1;
};

namespace {

[[noreturn]] void Domain(const char* what) { throw EvalError(what); }

double Checked(double r, const char* what) {
  if (!std::isfinite(r)) Domain(what);
  return r;
}

double ApplyUnary(UnaryOp op, double a) {
  switch (op) {
    case UnaryOp::kNeg:
      return -a;
    case UnaryOp::kSin:
      return std::sin(a);
    case UnaryOp::kCos:
      return std::cos(a);
    case UnaryOp::kExp:
      return Checked(std::exp(a), "overflow in exp");
    case UnaryOp::kSqrt:
      if (a < 0.0) Domain("sqrt of negative number");
      return std::sqrt(a);
    case UnaryOp::kAbs:
      return std::abs(a);
    case UnaryOp::kTanh:
      return std::tanh(a);
  }
  return a;
}

double ApplyBinary(BinaryOp op, double a, double b) {
  switch (op) {
    case BinaryOp::kAdd:
      return Checked(a + b, "overflow in addition");
    case BinaryOp::kSub:
      return Checked(a - b, "overflow in subtraction");
    case BinaryOp::kMul:
      return Checked(a * b, "overflow in multiplication");
    case BinaryOp::kDiv:
      if (b == 0.0) Domain("division by zero");
      return Checked(a / b, "overflow in division");
    case BinaryOp::kPow:
      if (a == 0.0 && b < 0.0) Domain("division by zero in power");
      return Checked(std::pow(a, b), "invalid power");
  }
  return a;
}

int Precedence(const Expr& e) {
  switch (e.kind()) {
    case ExprKind::kConstant:
      return 5;  // negatives are printed in parentheses
    case ExprKind::kVariable:
    case ExprKind::kNary:
      return 5;
    case ExprKind::kUnary:
      return e.unary_op() == UnaryOp::kNeg ? 3 : 5;
    case ExprKind::kBinary:
      switch (e.binary_op()) {
        case BinaryOp::kAdd:
        case BinaryOp::kSub:
          return 1;
        case BinaryOp::kMul:
        case BinaryOp::kDiv:
          return 2;
        case BinaryOp::kPow:
          return 4;
      }
  }
  return 5;
}

const char* UnaryName(UnaryOp op) {
  switch (op) {
    case UnaryOp::kNeg:
      return "-";
    case UnaryOp::kSin:
      return "sin";
    case UnaryOp::kCos:
      return "cos";
    case UnaryOp::kExp:
      return "exp";
    case UnaryOp::kSqrt:
      return "sqrt";
    case UnaryOp::kAbs:
      return "abs";
    case UnaryOp::kTanh:
      return "tanh";
  }
  return "?";
}

// Inputs are checked here so a NaN state cannot flow through silently.
double LoadVariable(double v, int index) {
  if (!std::isfinite(v)) throw EvalError("x" + std::to_string(index) + " is not finite");
  return v;
}

std::string FormatNumber(double v) {
  std::array<char, 64> buf{};
  const double magnitude = std::abs(v);
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), magnitude);
  std::string digits(buf.data(), end);
  if (std::signbit(v) && v != 0.0) return "(-" + digits + ")";
  return digits;
}

void Print(const Expr& e, std::string& out) {
  const auto wrapped = [&out](const Expr& child, bool parens) {
    if (parens) out += '(';
    Print(child, out);
    if (parens) out += ')';
  };
  switch (e.kind()) {
    case ExprKind::kConstant:
      out += FormatNumber(e.constant());
      return;
    case ExprKind::kVariable:
      out += 'x';
      out += std::to_string(e.variable());
      return;
    case ExprKind::kUnary:
      if (e.unary_op() == UnaryOp::kNeg) {
        out += '-';
        wrapped(e.children()[0], Precedence(e.children()[0]) < 3);
      } else {
        out += UnaryName(e.unary_op());
        wrapped(e.children()[0], true);
      }
      return;
    case ExprKind::kBinary: {
      const Expr& lhs = e.children()[0];
      const Expr& rhs = e.children()[1];
      const int p = Precedence(e);
      if (e.binary_op() == BinaryOp::kPow) {
        wrapped(lhs, Precedence(lhs) <= 4);
        out += '^';
        Print(rhs, out);
        return;
      }
      wrapped(lhs, Precedence(lhs) < p);
      switch (e.binary_op()) {
        case BinaryOp::kAdd:
          out += " + ";
          break;
        case BinaryOp::kSub:
          out += " - ";
          break;
        case BinaryOp::kMul:
          out += '*';
          break;
        default:
          out += '/';
          break;
      }
      wrapped(rhs, Precedence(rhs) <= p);
      return;
    }
    case ExprKind::kNary: {
      out += e.nary_op() == NaryOp::kMin ? "min(" : "max(";
      bool first = true;
      for (const auto& c : e.children()) {
        if (!first) out += ", ";
        first = false;
        Print(c, out);
      }
      out += ')';
      return;
    }
  }
}

// Recursive-descent parser over the grammar
//   sum     := product (('+' | '-') product)*
//   product := unary (('*' | '/') unary)*
//   unary   := '-' unary | '+' unary | power
//   power   := primary ('^' unary)?
//   primary := number | 'pi' | 'x' digits | name '(' sum (',' sum)* ')'
//            | '(' sum ')'
class Parser {
 public:
  Parser(std::string_view text, int n) : text_(text), n_(n) {}

  Expr Run() {
    Expr e = Sum();
    SkipSpace();
    if (pos_ != text_.size()) Fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void Fail(const std::string& message) const {
    throw ParseError(message, pos_);
  }
  [[noreturn]] void FailAt(const std::string& message, std::size_t at) const {
    throw ParseError(message, at);
  }

  void SkipSpace() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  bool Accept(char c) {
    SkipSpace();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void Expect(char c) {
    if (!Accept(c)) {
      Fail(std::string("expected '") + c + "'" +
           (pos_ < text_.size() ? "" : " before end of input"));
    }
  }

  Expr Sum() {
    Expr lhs = Product();
    for (;;) {
      if (Accept('+')) {
        lhs = Expr::Binary(BinaryOp::kAdd, lhs, Product());
      } else if (Accept('-')) {
        lhs = Expr::Binary(BinaryOp::kSub, lhs, Product());
      } else {
        return lhs;
      }
    }
  }

  Expr Product() {
    Expr lhs = UnaryTerm();
    for (;;) {
      if (Accept('*')) {
        lhs = Expr::Binary(BinaryOp::kMul, lhs, UnaryTerm());
      } else if (Accept('/')) {
        lhs = Expr::Binary(BinaryOp::kDiv, lhs, UnaryTerm());
      } else {
        return lhs;
      }
    }
  }

  Expr UnaryTerm() {
    if (Accept('-')) {
      Expr operand = UnaryTerm();
      if (operand.kind() == ExprKind::kConstant) {
        return Expr::Constant(-operand.constant());
      }
      return Expr::Unary(UnaryOp::kNeg, operand);
    }
    if (Accept('+')) return UnaryTerm();
    return Power();
  }

  Expr Power() {
    Expr base = Primary();
    SkipSpace();
    const std::size_t at = pos_;
    if (!Accept('^')) return base;
    Expr exponent = UnaryTerm();
    if (exponent.max_variable() > 0) {
      FailAt("exponent must be a constant expression", at);
    }
    double value = 0.0;
    try {
      value = exponent.Evaluate(StatePoint());
    } catch (const EvalError& err) {
      FailAt(std::string("invalid exponent: ") + err.what(), at);
    }
    return Expr::Binary(BinaryOp::kPow, base, Expr::Constant(value));
  }

  Expr Primary() {
    SkipSpace();
    if (pos_ >= text_.size()) Fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expr inner = Sum();
      Expect(')');
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return Number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return Name();
    Fail("unexpected '" + std::string(1, c) + "'");
  }

  Expr Number() {
    const std::size_t start = pos_;
    const auto digits = [&] {
      while (pos_ < text_.size() &&
             std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        ++pos_;
      }
    };
    digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      digits();
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < text_.size() && (text_[look] == '+' || text_[look] == '-')) {
        ++look;
      }
      if (look < text_.size() &&
          std::isdigit(static_cast<unsigned char>(text_[look]))) {
        pos_ = look;
        digits();
      }
    }
    double value = 0.0;
    const auto [ptr, ec] =
        std::from_chars(text_.data() + start, text_.data() + pos_, value);
    if (ec != std::errc() || ptr != text_.data() + pos_ || !std::isfinite(value)) {
      FailAt("malformed number", start);
    }
    return Expr::Constant(value);
  }

  Expr Name() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
            text_[pos_] == '_')) {
      ++pos_;
    }
    const std::string name(text_.substr(start, pos_ - start));

    if (name.size() > 1 && name[0] == 'x' &&
        std::all_of(name.begin() + 1, name.end(),
                    [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
      int index = 0;
      const auto [ptr, ec] =
          std::from_chars(name.data() + 1, name.data() + name.size(), index);
      if (ec != std::errc() || index < 1) {
        FailAt("invalid variable '" + name + "'", start);
      }
      if (index > n_) {
        FailAt("variable index exceeds dimension: '" + name + "' with n=" +
                   std::to_string(n_),
               start);
      }
      return Expr::Variable(index);
    }
    if (name == "pi") return Expr::Constant(std::numbers::pi);

    struct Function {
      const char* name;
      bool nary;
      int op;
    };
    static constexpr std::array<Function, 8> kFunctions{{
        {"sin", false, static_cast<int>(UnaryOp::kSin)},
        {"cos", false, static_cast<int>(UnaryOp::kCos)},
        {"exp", false, static_cast<int>(UnaryOp::kExp)},
        {"sqrt", false, static_cast<int>(UnaryOp::kSqrt)},
        {"abs", false, static_cast<int>(UnaryOp::kAbs)},
        {"tanh", false, static_cast<int>(UnaryOp::kTanh)},
        {"min", true, static_cast<int>(NaryOp::kMin)},
        {"max", true, static_cast<int>(NaryOp::kMax)},
    }};
    const auto fn = std::find_if(kFunctions.begin(), kFunctions.end(),
                                 [&](const Function& f) { return name == f.name; });
    if (fn == kFunctions.end()) FailAt("unknown identifier '" + name + "'", start);

    Expect('(');
    std::vector<Expr> args;
    args.push_back(Sum());
    while (Accept(',')) args.push_back(Sum());
    Expect(')');
    if (fn->nary) {
      if (args.size() < 2) {
        FailAt(name + " expects at least 2 arguments", start);
      }
      return Expr::Nary(static_cast<NaryOp>(fn->op), std::move(args));
    }
    if (args.size() != 1) FailAt(name + " expects exactly 1 argument", start);
    return Expr::Unary(static_cast<UnaryOp>(fn->op), args.front());
  }

  std::string_view text_;
  int n_;
  std::size_t pos_ = 0;
};

// Constructors with constant folding, used by the differentiator.
Expr Add(const Expr& a, const Expr& b) {
  if (a.IsConstant(0.0)) return b;
  if (b.IsConstant(0.0)) return a;
  if (a.kind() == ExprKind::kConstant && b.kind() == ExprKind::kConstant) {
    return Expr::Constant(a.constant() + b.constant());
  }
  return Expr::Binary(BinaryOp::kAdd, a, b);
}

Expr Neg(const Expr& a) {
  if (a.kind() == ExprKind::kConstant) return Expr::Constant(-a.constant());
  if (a.kind() == ExprKind::kUnary && a.unary_op() == UnaryOp::kNeg) {
    return a.children()[0];
  }
  return Expr::Unary(UnaryOp::kNeg, a);
}

Expr Sub(const Expr& a, const Expr& b) {
  if (b.IsConstant(0.0)) return a;
  if (a.IsConstant(0.0)) return Neg(b);
  if (a.kind() == ExprKind::kConstant && b.kind() == ExprKind::kConstant) {
    return Expr::Constant(a.constant() - b.constant());
  }
  return Expr::Binary(BinaryOp::kSub, a, b);
}

Expr Mul(const Expr& a, const Expr& b) {
  if (a.IsConstant(0.0) || b.IsConstant(0.0)) return Expr::Constant(0.0);
  if (a.IsConstant(1.0)) return b;
  if (b.IsConstant(1.0)) return a;
  if (a.kind() == ExprKind::kConstant && b.kind() == ExprKind::kConstant) {
    return Expr::Constant(a.constant() * b.constant());
  }
  return Expr::Binary(BinaryOp::kMul, a, b);
}

Expr Div(const Expr& a, const Expr& b) {
  if (a.IsConstant(0.0)) return Expr::Constant(0.0);
  if (b.IsConstant(1.0)) return a;
  return Expr::Binary(BinaryOp::kDiv, a, b);
}

Expr Pow(const Expr& base, double exponent) {
  if (exponent == 0.0) return Expr::Constant(1.0);
  if (exponent == 1.0) return base;
  return Expr::Binary(BinaryOp::kPow, base, Expr::Constant(exponent));
}

// Instruction codes for CompiledExpr.
enum Code : int {
  kPushConst,
  kPushVar,
  kUnaryBase,                     // + UnaryOp
  kBinaryBase = kUnaryBase + 16,  // + BinaryOp
  kMin = kBinaryBase + 16,
  kMax,
};

}  // namespace

ParseError::ParseError(const std::string& message, std::size_t position)
    : ExprError("parse error at position " + std::to_string(position) + ": " +
                message),
      position_(position) {}

Expr Expr::Constant(double value) {
  auto node = std::make_shared<Node>();
  node->kind = ExprKind::kConstant;
  node->value = value;
  return Expr(node);
}

Expr Expr::Variable(int index) {
  if (index < 1) throw ExprError("variable index must be >= 1");
  auto node = std::make_shared<Node>();
  node->kind = ExprKind::kVariable;
  node->variable = index;
  node->max_variable = index;
  return Expr(node);
}

Expr Expr::Unary(UnaryOp op, Expr operand) {
  auto node = std::make_shared<Node>();
  node->kind = ExprKind::kUnary;
  node->op = static_cast<int>(op);
  node->max_variable = operand.max_variable();
  node->count = 1 + operand.node_count();
  node->children.push_back(std::move(operand));
  return Expr(node);
}

Expr Expr::Binary(BinaryOp op, Expr lhs, Expr rhs) {
  if (op == BinaryOp::kPow && rhs.kind() != ExprKind::kConstant) {
    throw ExprError("pow exponent must be a constant");
  }
  auto node = std::make_shared<Node>();
  node->kind = ExprKind::kBinary;
  node->op = static_cast<int>(op);
  node->max_variable = std::max(lhs.max_variable(), rhs.max_variable());
  node->count = 1 + lhs.node_count() + rhs.node_count();
  node->children = {std::move(lhs), std::move(rhs)};
  return Expr(node);
}

Expr Expr::Nary(NaryOp op, std::vector<Expr> operands) {
  if (operands.size() < 2) throw ExprError("min/max need at least 2 operands");
  auto node = std::make_shared<Node>();
  node->kind = ExprKind::kNary;
  node->op = static_cast<int>(op);
  for (const auto& c : operands) {
    node->max_variable = std::max(node->max_variable, c.max_variable());
    node->count += c.node_count();
  }
  node->children = std::move(operands);
  return Expr(node);
}

ExprKind Expr::kind() const { return node_->kind; }
double Expr::constant() const { return node_->value; }
int Expr::variable() const { return node_->variable; }
UnaryOp Expr::unary_op() const { return static_cast<UnaryOp>(node_->op); }
BinaryOp Expr::binary_op() const { return static_cast<BinaryOp>(node_->op); }
NaryOp Expr::nary_op() const { return static_cast<NaryOp>(node_->op); }
const std::vector<Expr>& Expr::children() const { return node_->children; }
int Expr::max_variable() const { return node_->max_variable; }
std::size_t Expr::node_count() const { return node_->count; }

bool Expr::IsConstant(double value) const {
  return node_->kind == ExprKind::kConstant && node_->value == value;
}

bool Expr::DependsOn(int index) const {
  if (index > node_->max_variable) return false;
  if (node_->kind == ExprKind::kVariable) return node_->variable == index;
  return std::any_of(node_->children.begin(), node_->children.end(),
                     [index](const Expr& c) { return c.DependsOn(index); });
}

std::string Expr::ToString() const {
  std::string out;
  Print(*this, out);
  return out;
}

double Expr::Evaluate(const StatePoint& x) const {
  if (node_->max_variable > x.size()) {
    throw EvalError("point dimension " + std::to_string(x.size()) +
                    " is smaller than variable index " +
                    std::to_string(node_->max_variable));
  }
  switch (node_->kind) {
    case ExprKind::kConstant:
      return node_->value;
    case ExprKind::kVariable:
      return LoadVariable(x[node_->variable - 1], node_->variable);
    case ExprKind::kUnary:
      return ApplyUnary(unary_op(), node_->children[0].Evaluate(x));
    case ExprKind::kBinary:
      return ApplyBinary(binary_op(), node_->children[0].Evaluate(x),
                         node_->children[1].Evaluate(x));
    case ExprKind::kNary: {
      double acc = node_->children[0].Evaluate(x);
      for (std::size_t i = 1; i < node_->children.size(); ++i) {
        const double v = node_->children[i].Evaluate(x);
        acc = nary_op() == NaryOp::kMin ? std::min(acc, v) : std::max(acc, v);
      }
      return acc;
    }
  }
  return 0.0;
}

Expr Parse(std::string_view text, int n) {
  if (n < 1) throw ParseError("dimension must be >= 1", 0);
  return Parser(text, n).Run();
}

Expr Differentiate(const Expr& e, int index) {
  if (!e.DependsOn(index)) return Expr::Constant(0.0);
  switch (e.kind()) {
    case ExprKind::kConstant:
      return Expr::Constant(0.0);
    case ExprKind::kVariable:
      return Expr::Constant(1.0);
    case ExprKind::kUnary: {
      const Expr& u = e.children()[0];
      const Expr du = Differentiate(u, index);
      switch (e.unary_op()) {
        case UnaryOp::kNeg:
          return Neg(du);
        case UnaryOp::kSin:
          return Mul(Expr::Unary(UnaryOp::kCos, u), du);
        case UnaryOp::kCos:
          return Mul(Neg(Expr::Unary(UnaryOp::kSin, u)), du);
        case UnaryOp::kExp:
          return Mul(e, du);
        case UnaryOp::kSqrt:
          return Div(du, Mul(Expr::Constant(2.0), e));
        case UnaryOp::kTanh:
          return Mul(Sub(Expr::Constant(1.0), Pow(e, 2.0)), du);
        case UnaryOp::kAbs:
          throw NondifferentiableError("abs(" + u.ToString() +
                                       ") is not differentiable in x" +
                                       std::to_string(index));
      }
      break;
    }
    case ExprKind::kBinary: {
      const Expr& a = e.children()[0];
      const Expr& b = e.children()[1];
      switch (e.binary_op()) {
        case BinaryOp::kAdd:
          return Add(Differentiate(a, index), Differentiate(b, index));
        case BinaryOp::kSub:
          return Sub(Differentiate(a, index), Differentiate(b, index));
        case BinaryOp::kMul:
          return Add(Mul(Differentiate(a, index), b),
                     Mul(a, Differentiate(b, index)));
        case BinaryOp::kDiv:
          return Div(Sub(Mul(Differentiate(a, index), b),
                         Mul(a, Differentiate(b, index))),
                     Pow(b, 2.0));
        case BinaryOp::kPow: {
          const double c = b.constant();
          return Mul(Mul(Expr::Constant(c), Pow(a, c - 1.0)),
                     Differentiate(a, index));
        }
      }
      break;
    }
    case ExprKind::kNary:
      throw NondifferentiableError(
          std::string(e.nary_op() == NaryOp::kMin ? "min" : "max") +
          " is not differentiable in x" + std::to_string(index));
  }
  return Expr::Constant(0.0);
}

CompiledExpr::CompiledExpr(const Expr& e) {
  int depth = 0;
  const auto emit = [&](auto&& self, const Expr& node) -> void {
    switch (node.kind()) {
      case ExprKind::kConstant:
        program_.push_back({kPushConst, 0, node.constant()});
        max_depth_ = std::max(max_depth_, ++depth);
        return;
      case ExprKind::kVariable:
        program_.push_back({kPushVar, node.variable() - 1, 0.0});
        max_depth_ = std::max(max_depth_, ++depth);
        return;
      case ExprKind::kUnary:
        self(self, node.children()[0]);
        program_.push_back(
            {kUnaryBase + static_cast<int>(node.unary_op()), 0, 0.0});
        return;
      case ExprKind::kBinary:
        self(self, node.children()[0]);
        if (node.binary_op() == BinaryOp::kPow) {
          // Exponent is folded into the instruction.
          program_.push_back({kBinaryBase + static_cast<int>(BinaryOp::kPow), 0,
                              node.children()[1].constant()});
          return;
        }
        self(self, node.children()[1]);
        program_.push_back(
            {kBinaryBase + static_cast<int>(node.binary_op()), 0, 0.0});
        --depth;
        return;
      case ExprKind::kNary: {
        const int code = node.nary_op() == NaryOp::kMin ? kMin : kMax;
        self(self, node.children()[0]);
        for (std::size_t i = 1; i < node.children().size(); ++i) {
          self(self, node.children()[i]);
          program_.push_back({code, 0, 0.0});
          --depth;
        }
        return;
      }
    }
  };
  emit(emit, e);
}

double CompiledExpr::Evaluate(const double* x) const {
  constexpr int kInline = 32;
  std::array<double, kInline> small{};
  std::vector<double> large;
  double* stack = small.data();
  if (max_depth_ > kInline) {
    large.resize(max_depth_);
    stack = large.data();
  }
  int top = -1;
  for (const Instr& in : program_) {
    switch (in.code) {
      case kPushConst:
        stack[++top] = in.value;
        break;
      case kPushVar:
        stack[++top] = LoadVariable(x[in.arg], in.arg + 1);
        break;
      case kMin:
        --top;
        stack[top] = std::min(stack[top], stack[top + 1]);
        break;
      case kMax:
        --top;
        stack[top] = std::max(stack[top], stack[top + 1]);
        break;
      default:
        if (in.code >= kBinaryBase) {
          const auto op = static_cast<BinaryOp>(in.code - kBinaryBase);
          if (op == BinaryOp::kPow) {
            stack[top] = ApplyBinary(op, stack[top], in.value);
          } else {
            --top;
            stack[top] = ApplyBinary(op, stack[top], stack[top + 1]);
          }
        } else {
          stack[top] = ApplyUnary(static_cast<UnaryOp>(in.code - kUnaryBase),
                                  stack[top]);
        }
        break;
    }
  }
  return stack[0];
}

VectorField::VectorField(std::vector<Expr> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw ExprError("vector field needs >= 1 component");
  const int n = dimension();
  for (const auto& c : components_) {
    if (c.max_variable() > n) {
      throw ExprError("vector field component references x" +
                      std::to_string(c.max_variable()) + " beyond n=" +
                      std::to_string(n));
    }
    compiled_.emplace_back(c);
  }
}

VectorField VectorField::Parse(const std::vector<std::string>& components) {
  const int n = static_cast<int>(components.size());
  if (n < 1) throw ExprError("vector field needs >= 1 component");
  std::vector<Expr> parsed;
  parsed.reserve(n);
  for (const auto& text : components) parsed.push_back(lyapset::Parse(text, n));
  return VectorField(std::move(parsed));
}

void VectorField::Evaluate(const StatePoint& x, StatePoint& out) const {
  if (x.size() != dimension()) throw EvalError("vector field: dimension mismatch");
  out.resize(dimension());
  for (int i = 0; i < dimension(); ++i) out[i] = compiled_[i].Evaluate(x.data());
}

StatePoint VectorField::Evaluate(const StatePoint& x) const {
  StatePoint out;
  Evaluate(x, out);
  return out;
}

std::string VectorField::id() const {
  std::string out = "[";
  for (std::size_t i = 0; i < components_.size(); ++i) {
    if (i > 0) out += ", ";
    out += components_[i].ToString();
  }
  return out + "]";
}

ScalarField::ScalarField(Expr body, int dimension)
    : body_(std::move(body)), dimension_(dimension), compiled_(body_) {
  if (dimension_ < 1) throw ExprError("scalar field: dimension must be >= 1");
  if (body_.max_variable() > dimension_) {
    throw ExprError("scalar field references x" +
                    std::to_string(body_.max_variable()) + " beyond n=" +
                    std::to_string(dimension_));
  }
  try {
    for (int i = 1; i <= dimension_; ++i) {
      partials_.emplace_back(Differentiate(body_, i));
    }
  } catch (const NondifferentiableError& err) {
    partials_.clear();
    nondifferentiable_reason_ = err.what();
  }
}

ScalarField ScalarField::Parse(std::string_view text, int n) {
  return ScalarField(lyapset::Parse(text, n), n);
}

void ScalarField::RequireDimension(const StatePoint& x) const {
  if (x.size() != dimension_) throw EvalError("scalar field: dimension mismatch");
}

double ScalarField::Evaluate(const StatePoint& x) const {
  RequireDimension(x);
  return compiled_.Evaluate(x.data());
}

StatePoint ScalarField::Gradient(const StatePoint& x) const {
  RequireDimension(x);
  if (nondifferentiable_reason_) {
    throw NondifferentiableError(*nondifferentiable_reason_);
  }
  StatePoint g(dimension_);
  for (int i = 0; i < dimension_; ++i) g[i] = partials_[i].Evaluate(x.data());
  return g;
}

StatePoint ScalarField::FiniteDifferenceGradient(const StatePoint& x) const {
  RequireDimension(x);
  StatePoint g(dimension_);
  StatePoint probe = x;
  for (int i = 0; i < dimension_; ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
    probe[i] = x[i] + h;
    const double up = Evaluate(probe);
    probe[i] = x[i] - h;
    const double down = Evaluate(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

StatePoint Gradient(const ScalarField& s, const StatePoint& x) {
  return s.Gradient(x);
}

}  // namespace lyapset
