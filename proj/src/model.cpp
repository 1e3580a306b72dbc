#include "cssl/model.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace cssl::model {
namespace {

void append_i32(std::vector<std::uint8_t>& out, std::int32_t v) {
  std::uint8_t b[4];
  std::memcpy(b, &v, 4);
  out.insert(out.end(), b, b + 4);
}

// Serialized encoder architecture; the fingerprint hashes exactly these bytes.
std::vector<std::uint8_t> spec_bytes(const EncoderSpec& spec) {
  std::vector<std::uint8_t> out;
  append_i32(out, spec.input_size);
  append_i32(out, spec.channels);
  append_i32(out, static_cast<std::int32_t>(spec.stages.size()));
  for (const auto& s : spec.stages) {
    append_i32(out, s.filters);
    append_i32(out, s.kernel);
    append_i32(out, s.stride);
  }
  append_i32(out, spec.embedding_dim);
  return out;
}

std::uint64_t fnv1a(const std::uint8_t* data, std::size_t n) {
  std::uint64_t h = 1469598103934665603ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 1099511628211ull;
  }
  return h;
}

void validate(const EncoderSpec& espec, const HeadSpec& hspec) {
  if (espec.input_size < 1)
    throw std::invalid_argument("input_size must be >= 1");
  if (espec.channels < 1) throw std::invalid_argument("channels must be >= 1");
  if (espec.stages.empty()) throw std::invalid_argument("encoder needs stages");
  // with pad = kernel/2 the spatial dim never drops below 1, so any positive
  // input_size is structurally valid
  for (const auto& s : espec.stages)
    if (s.filters < 1 || s.kernel < 1 || s.stride < 1)
      throw std::invalid_argument("stage fields must be positive");
  if (espec.embedding_dim != espec.stages.back().filters)
    throw std::invalid_argument(
        "embedding_dim must equal the last stage's filters");
  if (hspec.n_patches < 1) throw std::invalid_argument("n_patches must be >= 1");
  if (hspec.n_classes < 2) throw std::invalid_argument("n_classes must be >= 2");
}

std::vector<nn::Encoder<float>::Stage> to_stages(const EncoderSpec& spec) {
  std::vector<nn::Encoder<float>::Stage> out;
  for (const auto& s : spec.stages) out.push_back({s.filters, s.kernel, s.stride});
  return out;
}

template <class T>
void write_raw(std::ofstream& f, const T& v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
void read_raw(std::ifstream& f, T& v) {
  f.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!f) throw std::runtime_error("checkpoint truncated");
}

constexpr char kMagic[8] = {'C', 'S', 'S', 'L', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

} // namespace

std::uint64_t fingerprint(const EncoderSpec& spec) {
  const auto bytes = spec_bytes(spec);
  return fnv1a(bytes.data(), bytes.size());
}

ModelState::ModelState(EncoderSpec espec, HeadSpec hspec, std::uint64_t seed)
    : espec_((validate(espec, hspec), std::move(espec))),
      hspec_(hspec),
      enc_(espec_.channels, espec_.input_size, to_stages(espec_)),
      head_(hspec_.n_patches * espec_.embedding_dim, hspec_.n_classes) {
  RngStream rng(seed);
  enc_.init(rng);
  head_.init(rng);
}

std::vector<nn::ParamTensor<float>*> ModelState::params() {
  auto out = enc_.params();
  out.push_back(&head_.weight);
  out.push_back(&head_.bias);
  return out;
}

std::vector<const nn::ParamTensor<float>*> ModelState::params() const {
  auto out = enc_.params();
  out.push_back(&head_.weight);
  out.push_back(&head_.bias);
  return out;
}

nn::Slab<float> pack_slab(const std::vector<const Image*>& images, int channels,
                          int size) {
  nn::Slab<float> slab;
  slab.resize(channels, static_cast<int>(images.size()), size, size);
  for (std::size_t b = 0; b < images.size(); ++b) {
    const Image& img = *images[b];
    if (img.height != size || img.width != size || img.channels != channels)
      throw std::invalid_argument("image does not match the slab shape");
    for (int c = 0; c < channels; ++c) {
      float* plane = slab.plane(c) + b * static_cast<std::size_t>(size) * size;
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
          plane[static_cast<std::size_t>(y) * size + x] = img.at(y, x, c);
    }
  }
  return slab;
}

std::vector<float> forward_pretext(ModelState& state,
                                   const std::vector<Patch>& patches) {
  const auto& hs = state.head_spec();
  if (static_cast<int>(patches.size()) != hs.n_patches)
    throw std::invalid_argument("patch count does not match the head");
  std::vector<const Image*> imgs;
  for (const auto& p : patches) imgs.push_back(&p.data);
  // the encoder is fully convolutional, so any uniform square side works;
  // espec.input_size only records the pretraining geometry
  auto slab = pack_slab(imgs, state.encoder_spec().channels,
                        patches.front().data.height);
  std::vector<float> emb, logits;
  state.encoder().forward(slab, emb);
  state.head().forward(emb.data(), 1, logits);
  return logits;
}

ModelState transfer_encoder(const ModelState& pretext, int n_classes,
                            std::uint64_t seed) {
  if (n_classes < 2)
    throw std::invalid_argument("transfer requires at least 2 classes");
  ModelState out(pretext.encoder_spec(), HeadSpec{1, n_classes}, seed);
  auto src = pretext.params();
  auto dst = out.params();
  // all but the final weight/bias pair belong to the encoder
  for (std::size_t t = 0; t + 2 < src.size(); ++t) dst[t]->w = src[t]->w;
  return out;
}

void save_checkpoint(const ModelState& state, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  f.write(kMagic, sizeof kMagic);
  write_raw(f, kVersion);
  const auto bytes = spec_bytes(state.encoder_spec());
  write_raw(f, fnv1a(bytes.data(), bytes.size()));
  write_raw(f, static_cast<std::uint32_t>(bytes.size()));
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  write_raw(f, static_cast<std::int32_t>(state.head_spec().n_patches));
  write_raw(f, static_cast<std::int32_t>(state.head_spec().n_classes));
  auto params = state.params();
  std::uint64_t total = 0;
  for (auto* p : params) total += p->size();
  write_raw(f, total);
  for (auto* p : params)
    f.write(reinterpret_cast<const char*>(p->w.data()),
            static_cast<std::streamsize>(p->size() * sizeof(float)));
  if (!f) throw std::runtime_error("checkpoint write failed: " + path);
}

ModelState load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  f.read(magic, sizeof magic);
  if (!f || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw std::runtime_error("not a checkpoint file: " + path);
  std::uint32_t version;
  read_raw(f, version);
  if (version != kVersion)
    throw std::runtime_error("unsupported checkpoint version");
  std::uint64_t stored_fp;
  read_raw(f, stored_fp);
  std::uint32_t spec_len;
  read_raw(f, spec_len);
  if (spec_len > 4096) throw std::runtime_error("checkpoint spec block too large");
  std::vector<std::uint8_t> bytes(spec_len);
  f.read(reinterpret_cast<char*>(bytes.data()), spec_len);
  if (!f) throw std::runtime_error("checkpoint truncated");
  if (fnv1a(bytes.data(), bytes.size()) != stored_fp)
    throw std::runtime_error("checkpoint fingerprint mismatch: " + path);

  EncoderSpec espec;
  std::size_t off = 0;
  auto take_i32 = [&]() {
    if (off + 4 > bytes.size())
      throw std::runtime_error("checkpoint spec block truncated");
    std::int32_t v;
    std::memcpy(&v, bytes.data() + off, 4);
    off += 4;
    return v;
  };
  espec.input_size = take_i32();
  espec.channels = take_i32();
  const std::int32_t n_stages = take_i32();
  if (n_stages < 1 || n_stages > 64)
    throw std::runtime_error("checkpoint stage count out of range");
  espec.stages.clear();
  for (std::int32_t i = 0; i < n_stages; ++i) {
    EncoderSpec::Stage s;
    s.filters = take_i32();
    s.kernel = take_i32();
    s.stride = take_i32();
    espec.stages.push_back(s);
  }
  espec.embedding_dim = take_i32();

  HeadSpec hspec;
  std::int32_t v;
  read_raw(f, v);
  hspec.n_patches = v;
  read_raw(f, v);
  hspec.n_classes = v;

  ModelState state(espec, hspec, 0);
  auto params = state.params();
  std::uint64_t total = 0;
  for (auto* p : params) total += p->size();
  std::uint64_t stored_total;
  read_raw(f, stored_total);
  if (stored_total != total)
    throw std::runtime_error("checkpoint parameter count mismatch");
  for (auto* p : params) {
    f.read(reinterpret_cast<char*>(p->w.data()),
           static_cast<std::streamsize>(p->size() * sizeof(float)));
    if (!f) throw std::runtime_error("checkpoint truncated");
  }
  return state;
}

} // namespace cssl::model
