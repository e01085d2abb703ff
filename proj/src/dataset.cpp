#include "zipvc/dataset.hpp"

#include "zipvc/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace zipvc {

namespace {

constexpr double kDosageTolerance = 1e-9;

std::string trim(std::string_view s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  auto end = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(begin, end - begin + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string_view rest(line);
  while (true) {
    auto comma = rest.find(',');
    out.push_back(trim(rest.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

bool is_missing(const std::string& cell) { return cell.empty() || cell == "NA" || cell == "."; }

std::optional<double> parse_number(const std::string& cell) {
  if (is_missing(cell)) return std::nullopt;
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw InputError("non-numeric cell '" + cell + "'");
  }
  return value;
}

// One parsed CSV: header names (without the id column) and per-id rows of
// optional values.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::string> ids;
  std::vector<std::vector<std::optional<double>>> rows;
  std::unordered_map<std::string, std::size_t> row_of;
};

Table read_table(const std::filesystem::path& path, const std::string& what) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + what + " file " + path.string());
  Table table;
  std::string line;
  if (!std::getline(in, line)) throw InputError(what + " file " + path.string() + " is empty");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  auto header = split_csv_line(line);
  if (header.empty() || header[0] != "id") {
    throw InputError(what + " file " + path.string() + ": bad header, first column must be 'id'");
  }
  table.columns.assign(header.begin() + 1, header.end());
  std::unordered_set<std::string> seen_names;
  for (const auto& name : table.columns) {
    if (name.empty()) throw InputError(what + " file " + path.string() + ": empty column name in header");
    if (!seen_names.insert(name).second) {
      throw InputError(what + " file " + path.string() + ": duplicate column '" + name + "'");
    }
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      std::ostringstream msg;
      msg << what << " file " << path.string() << " line " << line_no << ": expected "
          << header.size() << " fields, found " << cells.size();
      throw InputError(msg.str());
    }
    const std::string& id = cells[0];
    if (id.empty()) {
      throw InputError(what + " file " + path.string() + " line " + std::to_string(line_no) + ": empty id");
    }
    if (table.row_of.count(id)) {
      throw InputError(what + " file " + path.string() + ": duplicate id '" + id + "'");
    }
    std::vector<std::optional<double>> row;
    row.reserve(cells.size() - 1);
    for (std::size_t c = 1; c < cells.size(); ++c) {
      try {
        row.push_back(parse_number(cells[c]));
      } catch (const InputError& e) {
        throw InputError(what + " file " + path.string() + " line " + std::to_string(line_no) +
                         ", column '" + header[c] + "': " + e.what());
      }
    }
    table.row_of.emplace(id, table.ids.size());
    table.ids.push_back(id);
    table.rows.push_back(std::move(row));
  }
  return table;
}

void check_counts(const Table& pheno, const std::filesystem::path& path) {
  for (std::size_t r = 0; r < pheno.rows.size(); ++r) {
    const auto& v = pheno.rows[r][0];
    if (!v) continue;
    if (*v < 0.0) {
      throw InputError("phenotype file " + path.string() + ", id '" + pheno.ids[r] + "': negative count");
    }
    if (*v != std::floor(*v)) {
      throw InputError("phenotype file " + path.string() + ", id '" + pheno.ids[r] + "': non-integer count");
    }
  }
}

void check_dosages(const Table& geno, const std::filesystem::path& path) {
  for (std::size_t r = 0; r < geno.rows.size(); ++r) {
    for (std::size_t c = 0; c < geno.columns.size(); ++c) {
      const auto& v = geno.rows[r][c];
      if (v && (*v < -kDosageTolerance || *v > 2.0 + kDosageTolerance)) {
        std::ostringstream msg;
        msg << "genotype file " << path.string() << ", id '" << geno.ids[r] << "', column '"
            << geno.columns[c] << "': dosage " << *v << " outside [0,2]";
        throw InputError(msg.str());
      }
    }
  }
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

bool constant_column(const MatrixXd& m, Index c) {
  if (m.rows() == 0) return true;
  return (m.col(c).array() == m(0, c)).all();
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& pheno_path,
                     const std::filesystem::path& geno_path,
                     const std::filesystem::path& covar_path, const LoadPolicy& policy) {
  Table pheno = read_table(pheno_path, "phenotype");
  if (pheno.columns.size() != 1 || pheno.columns[0] != "y") {
    throw InputError("phenotype file " + pheno_path.string() + ": bad header, expected 'id,y'");
  }
  check_counts(pheno, pheno_path);

  Table geno = read_table(geno_path, "genotype");
  if (geno.columns.empty()) throw InputError("genotype file " + geno_path.string() + " has no SNP columns");
  check_dosages(geno, geno_path);

  std::optional<Table> covar;
  if (!covar_path.empty()) covar = read_table(covar_path, "covariate");

  const std::size_t p = geno.columns.size();
  const std::size_t q = covar ? covar->columns.size() : 0;

  // Intersection in phenotype order, then listwise deletion.
  struct Row {
    std::size_t pheno, geno, covar;
  };
  std::vector<Row> rows;
  for (std::size_t r = 0; r < pheno.ids.size(); ++r) {
    const auto& id = pheno.ids[r];
    auto g = geno.row_of.find(id);
    if (g == geno.row_of.end()) continue;
    std::size_t c_row = 0;
    if (covar) {
      auto c = covar->row_of.find(id);
      if (c == covar->row_of.end()) continue;
      c_row = c->second;
    }
    if (!pheno.rows[r][0]) continue;
    if (covar) {
      bool any_missing = false;
      for (const auto& v : covar->rows[c_row]) any_missing = any_missing || !v;
      if (any_missing) continue;
    }
    if (policy.missing == MissingPolicy::listwise) {
      bool any_missing = false;
      for (const auto& v : geno.rows[g->second]) any_missing = any_missing || !v;
      if (any_missing) continue;
    }
    rows.push_back({r, g->second, c_row});
  }
  if (rows.empty()) throw InputError("empty sample intersection across input files");

  Dataset data;
  const auto n = static_cast<Index>(rows.size());
  data.y.resize(n);
  data.genotypes.resize(n, static_cast<Index>(p));
  data.covariates.resize(n, static_cast<Index>(q));
  data.snp_names = geno.columns;
  if (covar) data.covariate_names = covar->columns;
  data.ids.reserve(rows.size());

  std::vector<double> col_sum(p, 0.0);
  std::vector<std::size_t> col_count(p, 0);
  for (Index i = 0; i < n; ++i) {
    const Row& row = rows[static_cast<std::size_t>(i)];
    data.ids.push_back(pheno.ids[row.pheno]);
    data.y(i) = *pheno.rows[row.pheno][0];
    for (std::size_t j = 0; j < p; ++j) {
      const auto& v = geno.rows[row.geno][j];
      if (v) {
        double d = std::clamp(*v, 0.0, 2.0);
        data.genotypes(i, static_cast<Index>(j)) = d;
        col_sum[j] += d;
        ++col_count[j];
      } else {
        data.genotypes(i, static_cast<Index>(j)) = std::nan("");
      }
    }
    for (std::size_t j = 0; j < q; ++j) data.covariates(i, static_cast<Index>(j)) = *covar->rows[row.covar][j];
  }
  if (policy.missing == MissingPolicy::mean_impute) {
    for (std::size_t j = 0; j < p; ++j) {
      if (col_count[j] == 0) throw InputError("genotype column '" + geno.columns[j] + "' has no observed values");
      const double mean = col_sum[j] / static_cast<double>(col_count[j]);
      for (Index i = 0; i < n; ++i) {
        double& g = data.genotypes(i, static_cast<Index>(j));
        if (std::isnan(g)) g = mean;
      }
    }
  }
  validate_dataset(data);
  return data;
}

void validate_dataset(const Dataset& data) {
  const Index n = data.n();
  if (n < 1) throw InputError("dataset has no samples");
  if (data.p() < 1) throw InputError("dataset has no genotype columns");
  if (data.genotypes.rows() != n || data.covariates.rows() != n || static_cast<Index>(data.ids.size()) != n) {
    throw InputError("dataset rows are not aligned");
  }
  if (static_cast<Index>(data.snp_names.size()) != data.p() ||
      static_cast<Index>(data.covariate_names.size()) != data.q()) {
    throw InputError("dataset column names do not match matrix widths");
  }
  for (Index i = 0; i < n; ++i) {
    const double y = data.y(i);
    if (!std::isfinite(y) || y < 0.0) throw InputError("sample '" + data.ids[i] + "': negative count");
    if (y != std::floor(y)) throw InputError("sample '" + data.ids[i] + "': non-integer count");
  }
  for (Index j = 0; j < data.p(); ++j) {
    const auto col = data.genotypes.col(j);
    if (!col.allFinite()) throw InputError("genotype column '" + data.snp_names[j] + "' has missing values");
    if ((col.array() < 0.0).any() || (col.array() > 2.0).any()) {
      throw InputError("genotype column '" + data.snp_names[j] + "' has dosages outside [0,2]");
    }
    if (constant_column(data.genotypes, j)) {
      throw InputError("genotype column '" + data.snp_names[j] + "' is constant");
    }
  }
  for (Index j = 0; j < data.q(); ++j) {
    if (!data.covariates.col(j).allFinite()) {
      throw InputError("covariate column '" + data.covariate_names[j] + "' has missing values");
    }
    if (constant_column(data.covariates, j)) {
      throw InputError("covariate column '" + data.covariate_names[j] + "' is constant");
    }
  }
}

GenotypeTable load_genotypes(const std::filesystem::path& path) {
  Table geno = read_table(path, "genotype");
  if (geno.columns.empty()) throw InputError("genotype file " + path.string() + " has no SNP columns");
  check_dosages(geno, path);
  GenotypeTable out;
  out.ids = geno.ids;
  out.snp_names = geno.columns;
  out.genotypes.resize(static_cast<Index>(geno.ids.size()), static_cast<Index>(geno.columns.size()));
  for (std::size_t r = 0; r < geno.rows.size(); ++r) {
    for (std::size_t c = 0; c < geno.columns.size(); ++c) {
      const auto& v = geno.rows[r][c];
      if (!v) {
        throw InputError("genotype file " + path.string() + ", id '" + geno.ids[r] + "', column '" +
                         geno.columns[c] + "': missing dosage");
      }
      out.genotypes(static_cast<Index>(r), static_cast<Index>(c)) = std::clamp(*v, 0.0, 2.0);
    }
  }
  return out;
}

void write_genotype_csv(const std::filesystem::path& path, const std::vector<std::string>& ids,
                        const std::vector<std::string>& names, const MatrixXd& genotypes) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "id";
  for (const auto& name : names) out << ',' << name;
  out << '\n';
  for (Index i = 0; i < genotypes.rows(); ++i) {
    out << ids[static_cast<std::size_t>(i)];
    for (Index j = 0; j < genotypes.cols(); ++j) out << ',' << format_double(genotypes(i, j));
    out << '\n';
  }
}

void write_dataset(const Dataset& data, const std::filesystem::path& pheno_path,
                   const std::filesystem::path& geno_path, const std::filesystem::path& covar_path) {
  {
    std::ofstream out(pheno_path);
    if (!out) throw InputError("cannot write " + pheno_path.string());
    out << "id,y\n";
    for (Index i = 0; i < data.n(); ++i) out << data.ids[i] << ',' << format_double(data.y(i)) << '\n';
  }
  write_genotype_csv(geno_path, data.ids, data.snp_names, data.genotypes);
  write_genotype_csv(covar_path, data.ids, data.covariate_names, data.covariates);
}

double pearson_correlation(const VectorXd& a, const VectorXd& b) {
  const VectorXd ca = a.array() - a.mean();
  const VectorXd cb = b.array() - b.mean();
  const double denom = std::sqrt(ca.squaredNorm() * cb.squaredNorm());
  return std::clamp(ca.dot(cb) / denom, -1.0, 1.0);
}

PruneReport ld_prune(const MatrixXd& genotypes, double threshold, const std::vector<std::string>& names) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw InputError("prune threshold must lie in (0, 1]");
  if (genotypes.cols() < 1) throw InputError("prune needs at least one column");
  auto column_name = [&](Index j) {
    return j < static_cast<Index>(names.size()) ? names[static_cast<std::size_t>(j)] : "#" + std::to_string(j);
  };
  const Index p = genotypes.cols();
  MatrixXd centered = genotypes.rowwise() - genotypes.colwise().mean();
  const VectorXd sq_norms = centered.colwise().squaredNorm();
  for (Index j = 0; j < p; ++j) {
    if (!(sq_norms(j) > 0.0)) throw InputError("genotype column '" + column_name(j) + "' has zero variance");
  }
  PruneReport report;
  report.threshold = threshold;
  for (Index j = 0; j < p; ++j) {
    bool dropped = false;
    for (Index k : report.kept) {
      // sqrt(s * s) == s, so a duplicated column gives exactly 1.
      const double r =
          std::clamp(centered.col(j).dot(centered.col(k)) / std::sqrt(sq_norms(j) * sq_norms(k)), -1.0, 1.0);
      if (std::abs(r) > threshold) {
        report.dropped.push_back({j, k, r});
        dropped = true;
        break;
      }
    }
    if (!dropped) report.kept.push_back(j);
  }
  return report;
}

MatrixXd select_columns(const MatrixXd& genotypes, const std::vector<Index>& columns) {
  MatrixXd out(genotypes.rows(), static_cast<Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) out.col(static_cast<Index>(c)) = genotypes.col(columns[c]);
  return out;
}

}  // namespace zipvc
