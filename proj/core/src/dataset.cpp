#include "class2simi/dataset.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "class2simi/rng.hpp"

namespace c2s {

namespace {

void check_labels(const std::vector<int>& labels, int n, int c, const char* which) {
  if (static_cast<int>(labels.size()) != n) {
    throw std::invalid_argument(std::string(which) + " labels: expected " +
                                std::to_string(n) + " entries, got " +
                                std::to_string(labels.size()));
  }
  for (int i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= c) {
      throw std::invalid_argument(std::string(which) + " label at index " +
                                  std::to_string(i) + " is " +
                                  std::to_string(labels[i]) + ", outside [0," +
                                  std::to_string(c) + ")");
    }
  }
}

}  // namespace

void LabeledDataset::validate() const {
  if (!clean_labels && !noisy_labels) {
    throw std::invalid_argument("dataset has neither clean nor noisy labels");
  }
  if (num_classes < 2) {
    throw std::invalid_argument("dataset needs at least 2 classes");
  }
  if (dim() < 1) throw std::invalid_argument("dataset needs at least 1 feature");
  if (clean_labels) check_labels(*clean_labels, n(), num_classes, "clean");
  if (noisy_labels) check_labels(*noisy_labels, n(), num_classes, "noisy");
}

LabeledDataset generate_blobs(int c, int per_class, int d, double separation,
                              double spread, std::uint64_t seed) {
  if (c < 2) throw std::invalid_argument("generate_blobs: c must be >= 2");
  if (per_class < 1) throw std::invalid_argument("generate_blobs: per_class must be >= 1");
  if (d < 2) throw std::invalid_argument("generate_blobs: d must be >= 2");
  if (!(separation > 0.0) || !(spread > 0.0)) {
    throw std::invalid_argument("generate_blobs: separation and spread must be > 0");
  }

  // Deterministic mean layout. d == 2: equally spaced on a circle. d > 2:
  // signed standard-basis directions (+e_0..+e_{d-1}, then -e_0..), moving to
  // an outer shell once both signs of every axis are used.
  Matrix means = Matrix::Zero(c, d);
  if (d == 2) {
    for (int k = 0; k < c; ++k) {
      const double angle = 2.0 * M_PI * k / c;
      means(k, 0) = separation * std::cos(angle);
      means(k, 1) = separation * std::sin(angle);
    }
  } else {
    for (int k = 0; k < c; ++k) {
      const int idx = k % (2 * d);
      const int axis = idx % d;
      const double sign = idx < d ? 1.0 : -1.0;
      const double shell = 1.0 + static_cast<double>(k / (2 * d));
      means(k, axis) = sign * separation * shell;
    }
  }

  SplitMix64 rng(seed);
  LabeledDataset ds;
  ds.num_classes = c;
  ds.features.resize(static_cast<Eigen::Index>(c) * per_class, d);
  std::vector<int> labels(static_cast<std::size_t>(c) * per_class);
  Eigen::Index row = 0;
  for (int k = 0; k < c; ++k) {
    for (int p = 0; p < per_class; ++p, ++row) {
      for (int j = 0; j < d; ++j) {
        ds.features(row, j) = means(k, j) + spread * rng.next_normal();
      }
      labels[static_cast<std::size_t>(row)] = k;
    }
  }
  ds.clean_labels = std::move(labels);
  ds.validate();
  return ds;
}

LabeledDataset corrupt_labels(const LabeledDataset& ds, const ClassTransitionMatrix& tc,
                              std::uint64_t seed) {
  ds.validate();
  if (!ds.clean_labels) {
    throw std::invalid_argument("corrupt_labels: dataset has no clean labels");
  }
  if (tc.num_classes() != ds.num_classes) {
    throw std::invalid_argument("corrupt_labels: matrix has " +
                                std::to_string(tc.num_classes()) +
                                " classes but dataset has " +
                                std::to_string(ds.num_classes));
  }

  SplitMix64 rng(seed);
  const int c = ds.num_classes;
  LabeledDataset out = ds;
  std::vector<int> noisy(ds.clean_labels->size());
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    const int clean = (*ds.clean_labels)[i];
    const double u = rng.next_double();
    double cum = 0.0;
    int drawn = c - 1;
    for (int j = 0; j < c; ++j) {
      cum += tc(clean, j);
      if (u < cum) {
        drawn = j;
        break;
      }
    }
    noisy[i] = drawn;
  }
  out.noisy_labels = std::move(noisy);
  out.validate();
  return out;
}

double empirical_class_noise_rate(const LabeledDataset& ds) {
  ds.validate();
  if (!ds.clean_labels || !ds.noisy_labels) {
    throw std::invalid_argument("empirical_class_noise_rate: needs both label vectors");
  }
  const auto& clean = *ds.clean_labels;
  const auto& noisy = *ds.noisy_labels;
  long long flips = 0;
  for (std::size_t i = 0; i < clean.size(); ++i) flips += clean[i] != noisy[i];
  return static_cast<double>(flips) / static_cast<double>(clean.size());
}

double empirical_simi_noise_rate(const LabeledDataset& ds, long long max_pairs,
                                 std::uint64_t seed) {
  ds.validate();
  if (!ds.clean_labels || !ds.noisy_labels) {
    throw std::invalid_argument("empirical_simi_noise_rate: needs both label vectors");
  }
  const int n = ds.n();
  if (n < 2) throw std::invalid_argument("empirical_simi_noise_rate: needs n >= 2");
  if (max_pairs < 1) throw std::invalid_argument("empirical_simi_noise_rate: max_pairs must be >= 1");

  const auto& clean = *ds.clean_labels;
  const auto& noisy = *ds.noisy_labels;
  const auto disagrees = [&](int i, int j) {
    return (clean[i] == clean[j]) != (noisy[i] == noisy[j]);
  };

  const long long total = static_cast<long long>(n) * (n - 1) / 2;
  long long flips = 0;
  if (total <= max_pairs) {
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) flips += disagrees(i, j);
    }
    return static_cast<double>(flips) / static_cast<double>(total);
  }

  SplitMix64 rng(seed);
  for (long long k = 0; k < max_pairs; ++k) {
    int i = rng.next_index(n);
    int j = rng.next_index(n);
    while (j == i) j = rng.next_index(n);
    flips += disagrees(i, j);
  }
  return static_cast<double>(flips) / static_cast<double>(max_pairs);
}

namespace {

double parse_double_cell(const std::string& cell, int line_no, int col) {
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (end[-1] == ' ' || end[-1] == '\t' || end[-1] == '\r')) --end;
  if (begin == end) {
    throw std::runtime_error("row " + std::to_string(line_no) + ", column " +
                             std::to_string(col) + ": empty field");
  }
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw std::runtime_error("row " + std::to_string(line_no) + ", column " +
                             std::to_string(col) + ": '" +
                             std::string(begin, end) + "' is not a number");
  }
  return value;
}

int parse_label_cell(const std::string& cell, int line_no, int col) {
  const double v = parse_double_cell(cell, line_no, col);
  const double rounded = std::nearbyint(v);
  if (std::abs(v - rounded) > 0.0) {
    throw std::runtime_error("row " + std::to_string(line_no) + ", column " +
                             std::to_string(col) + ": label '" + cell +
                             "' is not an integer");
  }
  if (rounded < 0.0) {
    throw std::runtime_error("row " + std::to_string(line_no) +
                             ": negative label " + cell);
  }
  return static_cast<int>(rounded);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string format_csv_double(double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw std::runtime_error("double formatting failed");
  return std::string(buf.data(), ptr);
}

}  // namespace

LabeledDataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open CSV file: " + path);

  std::vector<std::vector<double>> feature_rows;
  std::vector<int> labels;
  int expected_cells = -1;
  int line_no = 0;
  std::string line;
  bool skipped_header = false;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (schema.has_header && !skipped_header) {
      skipped_header = true;
      continue;
    }

    const auto cells = split_csv_line(line);
    const int ncells = static_cast<int>(cells.size());
    if (expected_cells < 0) {
      expected_cells = ncells;
      if (expected_cells < 2) {
        throw std::runtime_error("row " + std::to_string(line_no) +
                                 ": need at least one feature and one label column");
      }
    } else if (ncells != expected_cells) {
      throw std::runtime_error("row " + std::to_string(line_no) + ": expected " +
                               std::to_string(expected_cells) + " fields, got " +
                               std::to_string(ncells));
    }

    int label_col = schema.label_column < 0 ? ncells - 1 : schema.label_column;
    if (label_col >= ncells) {
      throw std::runtime_error("label column " + std::to_string(label_col) +
                               " out of range for " + std::to_string(ncells) +
                               " columns");
    }

    std::vector<double> row;
    row.reserve(static_cast<std::size_t>(ncells) - 1);
    for (int col = 0; col < ncells; ++col) {
      if (col == label_col) {
        labels.push_back(parse_label_cell(cells[col], line_no, col));
      } else {
        row.push_back(parse_double_cell(cells[col], line_no, col));
      }
    }
    feature_rows.push_back(std::move(row));
  }

  if (feature_rows.empty()) throw std::runtime_error("CSV file has no data rows: " + path);

  LabeledDataset ds;
  ds.features.resize(static_cast<Eigen::Index>(feature_rows.size()),
                     static_cast<Eigen::Index>(feature_rows.front().size()));
  for (std::size_t i = 0; i < feature_rows.size(); ++i) {
    for (std::size_t j = 0; j < feature_rows[i].size(); ++j) {
      ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          feature_rows[i][j];
    }
  }
  int max_label = 0;
  for (int y : labels) max_label = std::max(max_label, y);
  ds.num_classes = std::max(max_label + 1, 2);
  ds.clean_labels = std::move(labels);
  ds.validate();
  return ds;
}

void save_csv(const LabeledDataset& ds, const std::string& path) {
  ds.validate();
  if (!ds.clean_labels) {
    throw std::invalid_argument("save_csv: dataset has no clean labels");
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write CSV file: " + path);
  for (int j = 0; j < ds.dim(); ++j) out << 'f' << j << ',';
  out << "label";
  if (ds.noisy_labels) out << ",noisy_label";
  out << "\n";
  for (int i = 0; i < ds.n(); ++i) {
    for (int j = 0; j < ds.dim(); ++j) {
      out << format_csv_double(ds.features(i, j)) << ',';
    }
    out << (*ds.clean_labels)[i];
    if (ds.noisy_labels) out << ',' << (*ds.noisy_labels)[i];
    out << "\n";
  }
}

}  // namespace c2s
