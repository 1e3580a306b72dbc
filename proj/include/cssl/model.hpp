#pragma once

// Concrete f32 model: shared conv encoder + one dense head over the
// concatenated patch embeddings. Checkpoints carry an FNV-1a fingerprint of
// the encoder architecture so incompatible files are rejected at load time.

#include <cstdint>
#include <string>
#include <vector>

#include "cssl/image.hpp"
#include "cssl/nn.hpp"

namespace cssl::model {

struct EncoderSpec {
  struct Stage {
    int filters = 0;
    int kernel = 3;
    int stride = 2;
    bool operator==(const Stage&) const = default;
  };

  int input_size = 32; // pretraining reference side; forward accepts any
  int channels = 3;
  std::vector<Stage> stages = {{32, 3, 2}, {64, 3, 2}, {128, 3, 2}, {128, 3, 2}};
  int embedding_dim = 128; // must equal the last stage's filter count

  bool operator==(const EncoderSpec&) const = default;
};

struct HeadSpec {
  int n_patches = 1; // embeddings concatenated before the head
  int n_classes = 0;
  bool operator==(const HeadSpec&) const = default;
};

std::uint64_t fingerprint(const EncoderSpec& spec);

class ModelState {
 public:
  // init draw order is pinned: encoder stages in order, then the head
  ModelState(EncoderSpec espec, HeadSpec hspec, std::uint64_t seed);

  nn::Encoder<float>& encoder() { return enc_; }
  const nn::Encoder<float>& encoder() const { return enc_; }
  nn::Dense<float>& head() { return head_; }
  const nn::Dense<float>& head() const { return head_; }
  const EncoderSpec& encoder_spec() const { return espec_; }
  const HeadSpec& head_spec() const { return hspec_; }
  std::uint64_t encoder_fingerprint() const { return fingerprint(espec_); }

  // encoder tensors in stage order, then head weight and bias
  std::vector<nn::ParamTensor<float>*> params();
  std::vector<const nn::ParamTensor<float>*> params() const;

 private:
  EncoderSpec espec_;
  HeadSpec hspec_;
  nn::Encoder<float> enc_;
  nn::Dense<float> head_;
};

// Packs images (all channels x size x size, HWC) into a channel-major slab;
// image i becomes batch row i.
nn::Slab<float> pack_slab(const std::vector<const Image*>& images, int channels,
                          int size);

// Logits for one sample's patch tuple; patches.size() must match the head.
// Any uniform square patch side is accepted (the encoder is fully
// convolutional and pools globally).
std::vector<float> forward_pretext(ModelState& state,
                                   const std::vector<Patch>& patches);

// New model with the encoder copied bit for bit and a freshly seeded
// single-patch head of n_classes outputs.
ModelState transfer_encoder(const ModelState& pretext, int n_classes,
                            std::uint64_t seed);

void save_checkpoint(const ModelState& state, const std::string& path);
ModelState load_checkpoint(const std::string& path);

} // namespace cssl::model
