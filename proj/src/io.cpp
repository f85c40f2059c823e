#include "gspam/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace gspam::io {

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.push_back("");
  return out;
}

void finish_line(std::ofstream& out) { out << '\n'; }

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& token, const std::string& context) {
  const std::string t = trim(token);
  double v = 0.0;
  const auto* begin = t.data();
  const auto* end = t.data() + t.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{} || res.ptr != end)
    throw std::runtime_error(context + ": cannot parse number '" + t + "'");
  return v;
}

int parse_int(const std::string& token, const std::string& context) {
  const std::string t = trim(token);
  int v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc{} || res.ptr != t.data() + t.size())
    throw std::runtime_error(context + ": cannot parse integer '" + t + "'");
  return v;
}

void write_dataset_csv(const std::string& path, const Dataset& dataset) {
  auto out = open_out(path);
  for (Eigen::Index j = 0; j < dataset.p(); ++j) {
    if (dataset.column_names.empty())
      out << "x" << (j + 1) << ",";
    else
      out << dataset.column_names[j] << ",";
  }
  out << "y\n";
  for (Eigen::Index i = 0; i < dataset.n(); ++i) {
    for (Eigen::Index j = 0; j < dataset.p(); ++j)
      out << format_double(dataset.x(i, j)) << ",";
    out << format_double(dataset.y[i]);
    finish_line(out);
  }
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

Dataset read_dataset_csv(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(path + ":1: empty file");
  const auto header = split(trim(line), ',');
  if (header.size() < 2 || trim(header.back()) != "y")
    throw std::runtime_error(path + ":1: header must be x1,...,xp,y");
  const std::size_t p = header.size() - 1;
  std::vector<std::string> names(header.begin(), header.end() - 1);
  for (auto& nm : names) nm = trim(nm);

  std::vector<double> values;
  std::size_t rows = 0;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto fields = split(t, ',');
    if (fields.size() != p + 1)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected " +
                               std::to_string(p + 1) + " fields, got " +
                               std::to_string(fields.size()));
    const std::string ctx = path + ":" + std::to_string(lineno);
    for (const auto& f : fields) values.push_back(parse_double(f, ctx));
    ++rows;
  }
  if (rows < 2)
    throw std::runtime_error(path + ": need at least 2 data rows");
  Eigen::MatrixXd x(rows, p);
  Eigen::VectorXd y(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < p; ++j) x(i, j) = values[i * (p + 1) + j];
    y[i] = values[i * (p + 1) + p];
  }
  return Dataset(std::move(x), std::move(y), std::move(names));
}

void write_groups_file(const std::string& path, const GroupStructure& structure) {
  auto out = open_out(path);
  for (int g = 0; g < structure.size(); ++g) {
    const Group& grp = structure.group(g);
    out << grp.name << ": ";
    for (std::size_t k = 0; k < grp.members.size(); ++k) {
      if (k) out << ",";
      out << (grp.members[k] + 1);
    }
    finish_line(out);
  }
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

GroupStructure read_groups_file(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  std::vector<Group> groups;
  int p = 0;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto colon = t.find(':');
    if (colon == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected 'name: i,j,...'");
    Group g;
    g.name = trim(t.substr(0, colon));
    if (g.name.empty())
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": empty group name");
    const std::string ctx = path + ":" + std::to_string(lineno);
    for (const auto& tok : split(t.substr(colon + 1), ',')) {
      const int idx = parse_int(tok, ctx);
      if (idx < 1)
        throw std::runtime_error(ctx + ": indices are 1-based and positive");
      g.members.push_back(idx - 1);
      p = std::max(p, idx);
    }
    if (g.members.empty())
      throw std::runtime_error(ctx + ": group has no members");
    groups.push_back(std::move(g));
  }
  if (groups.empty()) throw std::runtime_error(path + ": no groups found");
  return GroupStructure(std::move(groups), p);
}

void write_truth_file(const std::string& path, const TruthInfo& truth) {
  auto out = open_out(path);
  out << "support: ";
  for (std::size_t k = 0; k < truth.support.size(); ++k) {
    if (k) out << ",";
    out << (truth.support[k] + 1);
  }
  out << "\nsigma: " << format_double(truth.sigma) << "\n";
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

TruthInfo read_truth_file(const std::string& path) {
  auto in = open_in(path);
  TruthInfo truth;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::string ctx = path + ":" + std::to_string(lineno);
    if (t.rfind("support:", 0) == 0) {
      for (const auto& tok : split(t.substr(8), ','))
        if (!trim(tok).empty()) truth.support.push_back(parse_int(tok, ctx) - 1);
    } else if (t.rfind("sigma:", 0) == 0) {
      truth.sigma = parse_double(t.substr(6), ctx);
    } else {
      throw std::runtime_error(ctx + ": unknown key");
    }
  }
  return truth;
}

void save_model(const std::string& path, const FittedModel& model) {
  auto out = open_out(path);
  const Eigen::Index n = model.n();
  const Eigen::Index p = model.p();
  out << "gspam-model 1\n";
  out << "n " << n << "\n";
  out << "p " << p << "\n";
  out << "lambda " << format_double(model.lambda) << "\n";
  out << "y_mean " << format_double(model.y_mean) << "\n";
  out << "converged " << (model.converged ? 1 : 0) << "\n";
  out << "outer_iterations " << model.outer_iterations << "\n";
  out << "objective " << format_double(model.objective) << "\n";
  out << "bandwidths";
  for (Eigen::Index j = 0; j < p; ++j) out << " " << format_double(model.bandwidths[j]);
  out << "\n";
  for (const auto& g : model.groups) {
    out << "group " << g.name << ":";
    for (std::size_t k = 0; k < g.members.size(); ++k)
      out << (k ? "," : " ") << (g.members[k] + 1);
    out << "\n";
  }
  out << "active";
  for (int j : model.active_set) out << " " << (j + 1);
  out << "\n";
  for (Eigen::Index j = 0; j < p; ++j) {
    out << "fhat " << (j + 1);
    for (Eigen::Index i = 0; i < n; ++i) out << " " << format_double(model.f_hat[j][i]);
    out << "\n";
  }
  for (Eigen::Index j = 0; j < p; ++j) {
    out << "trainx " << (j + 1);
    for (Eigen::Index i = 0; i < n; ++i) out << " " << format_double(model.train_x(i, j));
    out << "\n";
  }
  out << "trainy";
  for (Eigen::Index i = 0; i < n; ++i) out << " " << format_double(model.train_y[i]);
  out << "\n";
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

FittedModel load_model(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || trim(line) != "gspam-model 1")
    throw std::runtime_error(path + ":1: not a gspam model file (schema 1)");

  FittedModel m;
  Eigen::Index n = -1, p = -1;
  int lineno = 1;
  std::vector<bool> have_fhat, have_trainx;

  const auto need_dims = [&](const std::string& ctx) {
    if (n < 0 || p < 0)
      throw std::runtime_error(ctx + ": n and p must come before vector fields");
  };

  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const std::string ctx = path + ":" + std::to_string(lineno);
    std::istringstream ss(t);
    std::string key;
    ss >> key;
    if (key == "n") {
      std::string v; ss >> v;
      n = parse_int(v, ctx);
    } else if (key == "p") {
      std::string v; ss >> v;
      p = parse_int(v, ctx);
      m.f_hat.assign(p, Eigen::VectorXd());
      have_fhat.assign(p, false);
      have_trainx.assign(p, false);
    } else if (key == "lambda" || key == "y_mean" || key == "objective") {
      std::string v; ss >> v;
      const double d = parse_double(v, ctx);
      if (key == "lambda") m.lambda = d;
      else if (key == "y_mean") m.y_mean = d;
      else m.objective = d;
    } else if (key == "converged") {
      std::string v; ss >> v;
      m.converged = parse_int(v, ctx) != 0;
    } else if (key == "outer_iterations") {
      std::string v; ss >> v;
      m.outer_iterations = parse_int(v, ctx);
    } else if (key == "bandwidths") {
      need_dims(ctx);
      m.bandwidths.resize(p);
      std::string v;
      for (Eigen::Index j = 0; j < p; ++j) {
        if (!(ss >> v)) throw std::runtime_error(ctx + ": short bandwidths line");
        m.bandwidths[j] = parse_double(v, ctx);
      }
    } else if (key == "group") {
      std::string rest;
      std::getline(ss, rest);
      const auto colon = rest.find(':');
      if (colon == std::string::npos)
        throw std::runtime_error(ctx + ": malformed group line");
      Group g;
      g.name = trim(rest.substr(0, colon));
      for (const auto& tok : split(rest.substr(colon + 1), ','))
        g.members.push_back(parse_int(tok, ctx) - 1);
      m.groups.push_back(std::move(g));
    } else if (key == "active") {
      std::string v;
      while (ss >> v) m.active_set.push_back(parse_int(v, ctx) - 1);
    } else if (key == "trainy") {
      need_dims(ctx);
      m.train_y.resize(n);
      std::string v;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!(ss >> v)) throw std::runtime_error(ctx + ": short trainy line");
        m.train_y[i] = parse_double(v, ctx);
      }
    } else if (key == "fhat" || key == "trainx") {
      need_dims(ctx);
      std::string v;
      if (!(ss >> v)) throw std::runtime_error(ctx + ": missing covariate index");
      const int j = parse_int(v, ctx) - 1;
      if (j < 0 || j >= p) throw std::runtime_error(ctx + ": covariate index out of range");
      Eigen::VectorXd vec(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!(ss >> v)) throw std::runtime_error(ctx + ": short vector line");
        vec[i] = parse_double(v, ctx);
      }
      if (key == "fhat") {
        if (m.train_x.size() == 0) m.train_x.resize(n, p);
        m.f_hat[j] = std::move(vec);
        have_fhat[j] = true;
      } else {
        if (m.train_x.size() == 0) m.train_x.resize(n, p);
        m.train_x.col(j) = vec;
        have_trainx[j] = true;
      }
    } else {
      throw std::runtime_error(ctx + ": unknown key '" + key + "'");
    }
  }
  if (n < 0 || p < 0) throw std::runtime_error(path + ": missing n or p");
  for (Eigen::Index j = 0; j < p; ++j)
    if (!have_fhat[j] || !have_trainx[j])
      throw std::runtime_error(path + ": missing fhat/trainx for covariate " +
                               std::to_string(j + 1));
  if (m.train_y.size() != n) throw std::runtime_error(path + ": missing trainy");
  if (m.groups.empty()) throw std::runtime_error(path + ": no group lines");
  m.group_p = static_cast<int>(p);
  std::sort(m.active_set.begin(), m.active_set.end());
  return m;
}

}  // namespace gspam::io
