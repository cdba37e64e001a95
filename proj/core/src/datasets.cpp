#include "cmgn/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "cmgn/error.hpp"

namespace cmgn {

void SyntheticSpec::validate() const {
  if (num_classes < 2) throw ValidationError("num_classes must be >= 2");
  if (input_dim < 2) throw ValidationError("input_dim must be >= 2");
  if (samples_per_class < 1) throw ValidationError("samples_per_class must be >= 1");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw ValidationError("noise_sigma must be >= 0");
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
    throw ValidationError("holdout_fraction must lie in [0, 1)");
  }
}

std::size_t SyntheticSpec::holdout_per_class() const {
  const auto h = static_cast<std::size_t>(std::llround(holdout_fraction * static_cast<double>(samples_per_class)));
  return std::min(h, samples_per_class - 1);
}

std::size_t LabeledDataset::num_classes() const {
  return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
}

std::vector<std::size_t> LabeledDataset::indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < splits.size(); ++i) {
    if (splits[i] == split) out.push_back(i);
  }
  return out;
}

Matrix LabeledDataset::gather(const std::vector<std::size_t>& idx) const {
  Matrix out(idx.size(), inputs.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto src = inputs.row(idx[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

void LabeledDataset::validate(std::size_t n_classes) const {
  if (inputs.rows() != labels.size() || splits.size() != labels.size()) {
    throw ShapeError("dataset: row counts of inputs, labels and splits differ");
  }
  std::vector<bool> has_train(n_classes, false);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= n_classes) {
      throw ValidationError("dataset row " + std::to_string(i) + ": label " + std::to_string(labels[i]) +
                            " >= num_classes " + std::to_string(n_classes));
    }
    if (splits[i] == Split::Train) has_train[labels[i]] = true;
  }
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (!has_train[c]) throw ValidationError("dataset: class " + std::to_string(c) + " has no train rows");
  }
}

LabeledDataset generate(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t d = spec.input_dim;

  std::vector<std::vector<double>> centers;
  centers.reserve(spec.num_classes);
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    std::vector<double> v(d);
    double n = 0.0;
    // A Gaussian draw of exactly zero norm is practically impossible, but retry anyway.
    while (!(n > 0.0)) {
      for (double& x : v) x = gauss(rng);
      n = norm2(v);
    }
    centers.push_back(l2_normalize(v));
  }

  const std::size_t total = spec.num_classes * spec.samples_per_class;
  const std::size_t holdout = spec.holdout_per_class();
  LabeledDataset ds;
  ds.inputs = Matrix(total, d);
  ds.labels.resize(total);
  ds.splits.resize(total);
  std::vector<double> sample(d);
  std::size_t row = 0;
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    for (std::size_t s = 0; s < spec.samples_per_class; ++s, ++row) {
      std::vector<double> unit;
      do {
        for (std::size_t k = 0; k < d; ++k) sample[k] = centers[c][k] + spec.noise_sigma * gauss(rng);
      } while (!(norm2(sample) > 0.0));
      unit = l2_normalize(sample);
      std::copy(unit.begin(), unit.end(), ds.inputs.row(row).begin());
      ds.labels[row] = c;
      ds.splits[row] = (s + holdout >= spec.samples_per_class) ? Split::Holdout : Split::Train;
    }
  }
  return ds;
}

namespace {

VerificationPairs draw(std::vector<VerificationPair> candidates, std::size_t count, std::mt19937_64& rng) {
  VerificationPairs out;
  out.reserve(count);
  std::shuffle(candidates.begin(), candidates.end(), rng);
  const std::size_t take = std::min(count, candidates.size());
  out.assign(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take));
  std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
  while (out.size() < count) out.push_back(candidates[pick(rng)]);
  return out;
}

}  // namespace

VerificationPairs make_pairs(const LabeledDataset& dataset, std::size_t pairs_per_polarity,
                             std::uint64_t seed) {
  const std::vector<std::size_t> holdout = dataset.indices(Split::Holdout);
  std::vector<VerificationPair> positives;
  std::vector<VerificationPair> negatives;
  for (std::size_t x = 0; x < holdout.size(); ++x) {
    for (std::size_t y = x + 1; y < holdout.size(); ++y) {
      const std::size_t a = holdout[x];
      const std::size_t b = holdout[y];
      const bool same = dataset.labels[a] == dataset.labels[b];
      (same ? positives : negatives).push_back({a, b, same});
    }
  }
  if (pairs_per_polarity == 0) return {};
  if (positives.empty() || negatives.empty()) {
    throw ValidationError("make_pairs: holdout rows cannot form both same- and different-class pairs");
  }
  std::mt19937_64 rng(seed);
  VerificationPairs pairs = draw(std::move(positives), pairs_per_polarity, rng);
  VerificationPairs neg = draw(std::move(negatives), pairs_per_polarity, rng);
  pairs.insert(pairs.end(), neg.begin(), neg.end());
  return pairs;
}

namespace {

std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

}  // namespace

void save_csv(const LabeledDataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  const std::size_t d = dataset.input_dim();
  for (std::size_t k = 0; k < d; ++k) out << 'x' << k << ',';
  out << "label,split\n";
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (double v : dataset.inputs.row(i)) out << format_real(v) << ',';
    out << dataset.labels[i] << ',' << (dataset.splits[i] == Split::Train ? "train" : "holdout") << '\n';
  }
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

LabeledDataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty file '" + path.string() + "'", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = split_fields(line);
  if (header.size() < 3 || header[header.size() - 2] != "label" || header.back() != "split") {
    throw ParseError("line 1: header must be x0,...,x{d-1},label,split", 1);
  }
  const std::size_t d = header.size() - 2;
  for (std::size_t k = 0; k < d; ++k) {
    if (header[k] != "x" + std::to_string(k)) {
      throw ParseError("line 1: expected column 'x" + std::to_string(k) + "'", 1);
    }
  }

  std::vector<double> values;
  LabeledDataset ds;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (fields.size() != d + 2) {
      throw ParseError(where + "expected " + std::to_string(d + 2) + " fields, got " + std::to_string(fields.size()),
                       line_no);
    }
    for (std::size_t k = 0; k < d; ++k) {
      double v = 0.0;
      const auto f = fields[k];
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size() || !std::isfinite(v)) {
        throw ParseError(where + "bad real in column x" + std::to_string(k), line_no);
      }
      values.push_back(v);
    }
    std::size_t label = 0;
    const auto lf = fields[d];
    const auto lres = std::from_chars(lf.data(), lf.data() + lf.size(), label);
    if (lres.ec != std::errc() || lres.ptr != lf.data() + lf.size()) {
      throw ParseError(where + "bad label", line_no);
    }
    ds.labels.push_back(label);
    if (fields[d + 1] == "train") {
      ds.splits.push_back(Split::Train);
    } else if (fields[d + 1] == "holdout") {
      ds.splits.push_back(Split::Holdout);
    } else {
      throw ParseError(where + "split must be 'train' or 'holdout'", line_no);
    }
  }
  ds.inputs = Matrix(ds.labels.size(), d, std::move(values));
  return ds;
}

}  // namespace cmgn
