#include "cmgn/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "cmgn/error.hpp"

namespace cmgn {

namespace {

constexpr char kMagic[4] = {'C', 'M', 'G', 'N'};
// Refuse absurd headers before allocating.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

class Writer {
 public:
  void bytes(const char* p, std::size_t n) { out_.append(p, n); }
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void reals(std::span<const double> v) {
    for (double x : v) f64(x);
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}

  std::size_t offset() const noexcept { return pos_; }

  void expect(std::size_t n, const char* what) const {
    if (in_.size() - pos_ < n) {
      throw ParseError("checkpoint truncated at byte " + std::to_string(pos_) + " while reading " + what, pos_);
    }
  }
  std::uint8_t u8(const char* what) {
    expect(1, what);
    return static_cast<std::uint8_t>(in_[pos_++]);
  }
  std::uint32_t u32(const char* what) {
    expect(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{static_cast<std::uint8_t>(in_[pos_++])} << (8 * i);
    return v;
  }
  std::uint64_t u64(const char* what) {
    expect(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{static_cast<std::uint8_t>(in_[pos_++])} << (8 * i);
    return v;
  }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
  void reals(std::span<double> out, const char* what) {
    expect(out.size() * 8, what);
    for (double& x : out) x = f64(what);
  }
  bool at_end() const noexcept { return pos_ == in_.size(); }
  [[noreturn]] void fail(const std::string& msg, std::size_t at) const {
    throw ParseError("checkpoint byte " + std::to_string(at) + ": " + msg, at);
  }

 private:
  const std::string& in_;
  std::size_t pos_ = 0;
};

void write_tensors(Writer& w, const std::vector<Matrix>& weights, const std::vector<std::vector<double>>& biases,
                   const Matrix& classifier) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    w.reals(weights[l].data());
    w.reals(biases[l]);
  }
  w.reals(classifier.data());
}

void read_tensors(Reader& r, std::vector<Matrix>& weights, std::vector<std::vector<double>>& biases,
                  Matrix& classifier) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    r.reals(weights[l].data(), "layer weights");
    r.reals(biases[l], "layer biases");
  }
  r.reals(classifier.data(), "classifier");
}

}  // namespace

std::string encode_checkpoint(const TrainingSnapshot& snap) {
  snap.params.validate();
  Writer w;
  w.bytes(kMagic, 4);
  w.u32(kCheckpointVersion);
  const auto& layers = snap.params.layers;
  w.u32(static_cast<std::uint32_t>(layers.size()));
  for (const auto& layer : layers) {
    w.u32(static_cast<std::uint32_t>(layer.out_dim()));
    w.u32(static_cast<std::uint32_t>(layer.in_dim()));
    w.u8(static_cast<std::uint8_t>(layer.activation));
  }
  w.u32(static_cast<std::uint32_t>(snap.params.classifier.dim()));
  w.u32(static_cast<std::uint32_t>(snap.params.classifier.num_classes()));
  for (const auto& layer : layers) {
    w.reals(layer.weights.data());
    w.reals(layer.biases);
  }
  w.reals(snap.params.classifier.weights().data());

  const bool has_velocity = !snap.velocity.weights.empty() || snap.velocity.classifier.size() != 0;
  w.u8(has_velocity ? 1 : 0);
  if (has_velocity) {
    if (snap.velocity.weights.size() != layers.size()) throw ShapeError("checkpoint: velocity/model mismatch");
    write_tensors(w, snap.velocity.weights, snap.velocity.biases, snap.velocity.classifier);
  }

  w.f64(snap.curriculum.t);
  w.f64(snap.curriculum.momentum);
  w.u64(snap.curriculum.iteration_k);
  w.u8(static_cast<std::uint8_t>(snap.curriculum.statistic_kind));
  w.u8(static_cast<std::uint8_t>(snap.curriculum.placement));
  w.u64(snap.epochs_completed);
  return w.take();
}

TrainingSnapshot decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  r.expect(4, "magic");
  if (bytes.compare(0, 4, kMagic, 4) != 0) r.fail("bad magic (expected \"CMGN\")", 0);
  r.u32("magic");
  std::size_t at = r.offset();
  if (const auto version = r.u32("version"); version != kCheckpointVersion) {
    r.fail("unsupported format version " + std::to_string(version), at);
  }

  TrainingSnapshot snap;
  at = r.offset();
  const std::uint32_t num_layers = r.u32("layer count");
  if (num_layers > 1024) r.fail("implausible layer count " + std::to_string(num_layers), at);
  std::uint64_t total = 0;
  for (std::uint32_t l = 0; l < num_layers; ++l) {
    at = r.offset();
    const std::uint32_t out = r.u32("layer shape");
    const std::uint32_t in = r.u32("layer shape");
    const std::size_t act_at = r.offset();
    const std::uint8_t act = r.u8("activation");
    if (act > 1) r.fail("unknown activation tag " + std::to_string(act), act_at);
    total += std::uint64_t{out} * in + out;
    if (out == 0 || in == 0 || total > kMaxElements) r.fail("bad layer shape", at);
    DenseLayer layer;
    layer.weights = Matrix(out, in);
    layer.biases.assign(out, 0.0);
    layer.activation = static_cast<Activation>(act);
    snap.params.layers.push_back(std::move(layer));
  }
  at = r.offset();
  const std::uint32_t d = r.u32("classifier shape");
  const std::uint32_t n = r.u32("classifier shape");
  total += std::uint64_t{d} * n;
  if (d == 0 || n == 0 || total > kMaxElements) r.fail("bad classifier shape", at);
  if (!snap.params.layers.empty() && snap.params.layers.back().out_dim() != d) {
    r.fail("classifier dim does not match last layer", at);
  }
  for (std::size_t l = 1; l < snap.params.layers.size(); ++l) {
    if (snap.params.layers[l].in_dim() != snap.params.layers[l - 1].out_dim()) r.fail("layer chain mismatch", at);
  }

  for (auto& layer : snap.params.layers) {
    r.reals(layer.weights.data(), "layer weights");
    r.reals(layer.biases, "layer biases");
  }
  // Stored columns are already unit-norm; keep the bits exactly as written.
  Matrix w(d, n);
  r.reals(w.data(), "classifier");
  snap.params.classifier = ClassifierMatrix();
  snap.params.classifier.mutable_weights() = std::move(w);

  at = r.offset();
  const std::uint8_t has_velocity = r.u8("velocity flag");
  if (has_velocity > 1) r.fail("bad velocity flag", at);
  if (has_velocity == 1) {
    snap.velocity = ModelTensors::zeros_like(snap.params);
    read_tensors(r, snap.velocity.weights, snap.velocity.biases, snap.velocity.classifier);
  }

  snap.curriculum.t = r.f64("curriculum t");
  snap.curriculum.momentum = r.f64("curriculum momentum");
  snap.curriculum.iteration_k = r.u64("iteration counter");
  at = r.offset();
  const std::uint8_t kind = r.u8("statistic kind");
  if (kind > 2) r.fail("unknown statistic kind " + std::to_string(kind), at);
  snap.curriculum.statistic_kind = static_cast<StatisticKind>(kind);
  at = r.offset();
  const std::uint8_t placement = r.u8("momentum placement");
  if (placement > 1) r.fail("unknown momentum placement " + std::to_string(placement), at);
  snap.curriculum.placement = static_cast<MomentumPlacement>(placement);
  snap.epochs_completed = r.u64("epoch counter");
  if (!r.at_end()) r.fail("trailing bytes after checkpoint", r.offset());
  return snap;
}

void save_checkpoint(const TrainingSnapshot& snapshot, const std::filesystem::path& path) {
  const std::string bytes = encode_checkpoint(snapshot);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

TrainingSnapshot load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace cmgn
