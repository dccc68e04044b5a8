#include "fgsmooth/problem_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace fgs {

namespace {

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) {
    if (tok[0] == '#') break;
    tokens.push_back(tok);
  }
  return tokens;
}

double parse_number(const std::string& tok, int line_no) {
  double v = 0.0;
  const auto [ptr, ec] =
      std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw ParseError("line " + std::to_string(line_no) + ": bad number '" +
                     tok + "'");
  return v;
}

int parse_int(const std::string& tok, int line_no) {
  int v = 0;
  const auto [ptr, ec] =
      std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw ParseError("line " + std::to_string(line_no) + ": bad integer '" +
                     tok + "'");
  return v;
}

class TokenReader {
 public:
  TokenReader(std::vector<std::string> tokens, int line_no)
      : tokens_(std::move(tokens)), line_(line_no) {}

  bool done() const { return pos_ >= tokens_.size(); }
  size_t remaining() const { return tokens_.size() - pos_; }
  size_t position() const { return pos_; }
  const std::string& peek(size_t ahead = 0) const {
    return tokens_.at(pos_ + ahead);
  }

  std::string next() {
    if (done())
      throw ParseError("line " + std::to_string(line_) + ": truncated record");
    return tokens_[pos_++];
  }
  double number() { return parse_number(next(), line_); }
  int integer() { return parse_int(next(), line_); }

  void expect(const std::string& kw) {
    if (next() != kw)
      throw ParseError("line " + std::to_string(line_) + ": expected '" + kw +
                       "'");
  }

  VectorXd vector(int n) {
    VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = number();
    return v;
  }

  MatrixXd matrix(int rows, int cols) {
    MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) m(r, c) = number();
    return m;
  }

  int line() const { return line_; }

 private:
  std::vector<std::string> tokens_;
  size_t pos_ = 0;
  int line_;
};

}  // namespace

LinearProblem read_problem(std::istream& is) {
  LinearProblem p;
  int count = -1, dx = -1;
  bool have_prior = false;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    auto tokens = tokenize(line);
    if (tokens.empty()) continue;
    TokenReader rd(std::move(tokens), line_no);
    const std::string kind = rd.next();

    if (kind == "vars") {
      count = rd.integer();
      dx = rd.integer();
      if (count <= 0 || dx <= 0)
        throw ParseError("line " + std::to_string(line_no) +
                         ": vars needs positive count and dimension");
      p.layout = VariableLayout::uniform(count, dx);
      continue;
    }
    if (count < 0)
      throw ParseError("line " + std::to_string(line_no) +
                       ": 'vars' header must come first");

    if (kind == "prior") {
      p.prior.a0 = rd.vector(dx);
      rd.expect("cov");
      p.prior.P0 = rd.matrix(dx, dx);
      have_prior = true;
    } else if (kind == "prop") {
      PropagationFactor f;
      f.k = rd.integer();
      f.F = rd.matrix(dx, dx);
      f.a = rd.vector(dx);
      rd.expect("cov");
      f.Q = rd.matrix(dx, dx);
      p.props.push_back(std::move(f));
    } else if (kind == "obs") {
      ObservationFactor f;
      const int anchor = rd.integer();
      // Locate the resid/cov keywords to fix the residual dimension before
      // reading the H blocks.
      size_t resid_at = 0, cov_at = 0;
      bool found_resid = false, found_cov = false;
      for (size_t ahead = 0; ahead < rd.remaining(); ++ahead) {
        if (!found_resid && rd.peek(ahead) == "resid") {
          resid_at = ahead;
          found_resid = true;
        } else if (found_resid && rd.peek(ahead) == "cov") {
          cov_at = ahead;
          found_cov = true;
          break;
        }
      }
      if (!found_resid || !found_cov)
        throw ParseError("line " + std::to_string(line_no) +
                         ": obs needs 'resid' and 'cov' sections");
      const int dz = static_cast<int>(cov_at - resid_at - 1);
      if (dz <= 0)
        throw ParseError("line " + std::to_string(line_no) +
                         ": empty obs residual");

      while (rd.peek() != "resid") {
        std::string head = rd.next();
        if (head.empty() || head.back() != ':')
          throw ParseError("line " + std::to_string(line_no) +
                           ": expected '<index>:' before H block, got '" +
                           head + "'");
        head.pop_back();
        const int idx = parse_int(head, line_no);
        f.involved.emplace_back(idx, rd.matrix(dz, dx));
      }
      rd.expect("resid");
      f.c = rd.vector(dz);
      rd.expect("cov");
      f.R = rd.matrix(dz, dz);
      if (f.involved.empty())
        throw ParseError("line " + std::to_string(line_no) +
                         ": obs involves no state");
      if (f.anchor() != anchor)
        throw ParseError("line " + std::to_string(line_no) +
                         ": anchor does not match largest involved index");
      p.obs.push_back(std::move(f));
    } else {
      throw ParseError("line " + std::to_string(line_no) +
                       ": unknown record '" + kind + "'");
    }
    if (!rd.done())
      throw ParseError("line " + std::to_string(line_no) +
                       ": trailing tokens");
  }

  if (count < 0) throw ParseError("missing 'vars' header");
  if (!have_prior) throw ParseError("missing 'prior' record");
  try {
    p.validate();
  } catch (const SolveError& e) {
    throw ParseError(std::string("invalid problem: ") + e.what());
  }
  return p;
}

LinearProblem read_problem_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open '" + path + "'");
  return read_problem(f);
}

namespace {

// std::to_chars keeps the output locale-independent, matching the parser.
void write_numbers(std::ostream& os, const MatrixXd& m) {
  char buf[40];
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const auto [end, ec] =
          std::to_chars(buf, buf + sizeof(buf), m(r, c));
      os << ' ';
      os.write(buf, end - buf);
    }
}

}  // namespace

void write_problem(std::ostream& os, const LinearProblem& p) {
  if (!p.layout.is_uniform())
    throw SolveError(ErrorCode::DimensionMismatch,
                     "problem file format requires uniform state dimension");
  os << "vars " << p.layout.count() << ' ' << p.layout.dim(0) << '\n';
  os << "prior";
  write_numbers(os, p.prior.a0);
  os << " cov";
  write_numbers(os, p.prior.P0);
  os << '\n';
  for (const auto& f : p.props) {
    os << "prop " << f.k;
    write_numbers(os, f.F);
    write_numbers(os, f.a);
    os << " cov";
    write_numbers(os, f.Q);
    os << '\n';
  }
  for (const auto& f : p.obs) {
    os << "obs " << f.anchor();
    for (const auto& [i, h] : f.involved) {
      os << ' ' << i << ':';
      write_numbers(os, h);
    }
    os << " resid";
    write_numbers(os, f.c);
    os << " cov";
    write_numbers(os, f.R);
    os << '\n';
  }
}

}  // namespace fgs
