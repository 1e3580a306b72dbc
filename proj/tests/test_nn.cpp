#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "cssl/kernels.hpp"
#include "cssl/nn.hpp"
#include "cssl/rng.hpp"

using cssl::RngStream;
namespace nn = cssl::nn;

namespace {

void fill_normal(std::vector<double>& v, RngStream& rng) {
  for (auto& x : v) x = rng.normal(0.0, 1.0);
}

// Direct six-loop convolution, independent of the im2col path.
void conv_direct(const nn::Slab<double>& x, const std::vector<double>& w,
                 const std::vector<double>& b, int out_c, int k, int s, int p,
                 nn::Slab<double>& y) {
  const int oh = (x.h + 2 * p - k) / s + 1;
  const int ow = (x.w + 2 * p - k) / s + 1;
  y.resize(out_c, x.n, oh, ow);
  for (int co = 0; co < out_c; ++co)
    for (int bi = 0; bi < x.n; ++bi)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          double acc = b[co];
          for (int ci = 0; ci < x.c; ++ci)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int iy = oy * s + ky - p;
                const int ix = ox * s + kx - p;
                if (iy < 0 || iy >= x.h || ix < 0 || ix >= x.w) continue;
                acc += w[((co * x.c + ci) * k + ky) * k + kx] *
                       x.plane(ci)[(static_cast<std::size_t>(bi) * x.h + iy) * x.w + ix];
              }
          y.plane(co)[(static_cast<std::size_t>(bi) * y.h + oy) * y.w + ox] = acc;
        }
}

struct ToyNet {
  nn::Encoder<double> enc;
  nn::Dense<double> head;
  int batch, k;

  ToyNet(int batch_, int k_, int classes, std::uint64_t seed)
      : enc(2, 6, {{3, 3, 2}, {4, 3, 2}}),
        head(k_ * 4, classes),
        batch(batch_), k(k_) {
    RngStream rng(seed);
    enc.init(rng);
    head.init(rng);
  }

  double loss(const nn::Slab<double>& in, const std::vector<int>& labels) {
    std::vector<double> emb, logits;
    enc.forward(in, emb);
    head.forward(emb.data(), batch, logits);
    return nn::softmax_xent<double>(logits, labels, batch, head.out_dim(),
                                    nullptr);
  }

  // loss + analytic gradients into every ParamTensor::g (and din if non-null)
  double grads(const nn::Slab<double>& in, const std::vector<int>& labels,
               nn::Slab<double>* din = nullptr) {
    std::vector<double> emb, logits, dlogits, demb;
    enc.forward(in, emb);
    head.forward(emb.data(), batch, logits);
    const double l = nn::softmax_xent<double>(logits, labels, batch,
                                              head.out_dim(), &dlogits);
    head.backward(emb.data(), dlogits.data(), batch, &demb);
    enc.backward(in, demb, din);
    return l;
  }

  std::vector<nn::ParamTensor<double>*> params() {
    auto out = enc.params();
    out.push_back(&head.weight);
    out.push_back(&head.bias);
    return out;
  }
};

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1e-6, std::abs(a), std::abs(b)});
}

} // namespace

TEST_CASE("conv forward matches a direct six-loop convolution") {
  cssl::kernels::set_backend("scalar");
  RngStream rng(77);
  nn::Slab<double> x;
  x.resize(3, 2, 7, 5);
  fill_normal(x.a, rng);
  nn::Conv2d<double> conv(3, 4, 3, 2, 1);
  conv.init(rng);
  for (auto& b : conv.bias.w) b = rng.normal(0.0, 0.5);

  nn::Slab<double> y, ref;
  conv.forward(x, y);
  conv_direct(x, conv.weight.w, conv.bias.w, 4, 3, 2, 1, ref);
  REQUIRE(y.a.size() == ref.a.size());
  for (std::size_t i = 0; i < y.a.size(); ++i)
    CHECK(std::abs(y.a[i] - ref.a[i]) <= 1e-12 * (1.0 + std::abs(ref.a[i])));
  cssl::kernels::reset_backend();
}

TEST_CASE("hand-computed forward value through conv, relu, pooling and dense") {
  cssl::kernels::set_backend("scalar");
  nn::Encoder<double> enc(1, 2, {{1, 3, 2}});
  auto params = enc.params();
  // 3x3 kernel of ones, bias 0.5: with pad 1 and stride 2 on a 2x2 input the
  // single output cell sees exactly the four input pixels
  for (auto& w : params[0]->w) w = 1.0;
  params[1]->w[0] = 0.5;
  nn::Dense<double> head(1, 1);
  head.weight.w[0] = 2.0;
  head.bias.w[0] = -1.0;

  nn::Slab<double> in;
  in.resize(1, 1, 2, 2);
  in.a = {0.1, 0.2, 0.3, 0.4};
  std::vector<double> emb, logits;
  enc.forward(in, emb);
  REQUIRE(emb.size() == 1);
  CHECK(emb[0] == doctest::Approx(1.5).epsilon(1e-12));
  head.forward(emb.data(), 1, logits);
  CHECK(logits[0] == doctest::Approx(2.0).epsilon(1e-12));
  cssl::kernels::reset_backend();
}

TEST_CASE("analytic gradients match central finite differences") {
  cssl::kernels::set_backend("scalar");
  const double h = 1e-5, tol = 1e-4;

  for (int k : {1, 2}) {
    CAPTURE(k);
    const int batch = 3, classes = 3;
    ToyNet net(batch, k, classes, 1234 + k);
    nn::Slab<double> in;
    in.resize(2, batch * k, 6, 6);
    RngStream rng(99 + k);
    fill_normal(in.a, rng);
    std::vector<int> labels(batch);
    for (auto& l : labels) l = static_cast<int>(rng.index(classes));

    nn::Slab<double> din;
    net.grads(in, labels, &din);
    std::vector<std::vector<double>> analytic;
    for (auto* p : net.params()) analytic.push_back(p->g);

    std::size_t checked = 0;
    double worst = 0.0;
    auto ps = net.params();
    for (std::size_t t = 0; t < ps.size(); ++t) {
      for (std::size_t i = 0; i < ps[t]->size(); ++i) {
        const double keep = ps[t]->w[i];
        ps[t]->w[i] = keep + h;
        const double lp = net.loss(in, labels);
        ps[t]->w[i] = keep - h;
        const double lm = net.loss(in, labels);
        ps[t]->w[i] = keep;
        const double num = (lp - lm) / (2 * h);
        worst = std::max(worst, rel_err(analytic[t][i], num));
        ++checked;
      }
    }
    CHECK(checked > 150);
    CHECK(worst < tol);

    // input gradient exercises col2im end to end
    RngStream pick(7);
    double worst_in = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t i = pick.index(in.a.size());
      const double keep = in.a[i];
      in.a[i] = keep + h;
      const double lp = net.loss(in, labels);
      in.a[i] = keep - h;
      const double lm = net.loss(in, labels);
      in.a[i] = keep;
      worst_in = std::max(worst_in, rel_err(din.a[i], (lp - lm) / (2 * h)));
    }
    CHECK(worst_in < tol);
  }
  cssl::kernels::reset_backend();
}

TEST_CASE("shared encoder gradient is the sum over folded patches") {
  cssl::kernels::set_backend("scalar");
  nn::Encoder<double> enc(2, 6, {{3, 3, 2}, {4, 3, 2}});
  RngStream rng(4242);
  enc.init(rng);
  const int d = enc.embedding_dim();

  nn::Slab<double> both, solo;
  both.resize(2, 2, 6, 6);
  fill_normal(both.a, rng);
  // patch j of the folded batch, as its own single-image batch
  auto extract = [&](int j) {
    solo.resize(2, 1, 6, 6);
    for (int c = 0; c < 2; ++c)
      for (int s = 0; s < 36; ++s)
        solo.plane(c)[s] = both.plane(c)[static_cast<std::size_t>(j) * 36 + s];
  };

  std::vector<double> demb(2 * d, 0.0);
  RngStream grng(5);
  for (auto& g : demb) g = grng.normal(0.0, 1.0);

  std::vector<double> emb;
  enc.forward(both, emb);
  enc.backward(both, demb);
  auto joint = enc.params();
  std::vector<std::vector<double>> joint_g;
  for (auto* p : joint) joint_g.push_back(p->g);

  std::vector<std::vector<double>> sum_g(joint.size());
  for (std::size_t t = 0; t < joint.size(); ++t)
    sum_g[t].assign(joint[t]->size(), 0.0);
  for (int j = 0; j < 2; ++j) {
    extract(j);
    std::vector<double> demb_j(demb.begin() + j * d, demb.begin() + (j + 1) * d);
    enc.forward(solo, emb);
    enc.backward(solo, demb_j);
    auto ps = enc.params();
    for (std::size_t t = 0; t < ps.size(); ++t)
      for (std::size_t i = 0; i < ps[t]->size(); ++i)
        sum_g[t][i] += ps[t]->g[i];
  }

  for (std::size_t t = 0; t < joint_g.size(); ++t)
    for (std::size_t i = 0; i < joint_g[t].size(); ++i)
      CHECK(std::abs(joint_g[t][i] - sum_g[t][i]) <=
            1e-10 * (1.0 + std::abs(sum_g[t][i])));
  cssl::kernels::reset_backend();
}

TEST_CASE("adam drives a separable toy problem to zero training error") {
  cssl::kernels::set_backend("scalar");
  // two gaussian blobs in 4-d, dense classifier, full-batch adam
  const int n = 32, dim = 4;
  RngStream rng(2026);
  std::vector<double> x(static_cast<std::size_t>(n) * dim);
  std::vector<int> y(n);
  for (int i = 0; i < n; ++i) {
    y[i] = i % 2;
    for (int j = 0; j < dim; ++j)
      x[static_cast<std::size_t>(i) * dim + j] =
          rng.normal(y[i] == 0 ? -2.0 : 2.0, 0.5);
  }
  nn::Dense<double> clf(dim, 2);
  clf.init(rng);
  nn::AdamConfig cfg;
  std::vector<double> logits, dlogits;
  double first_loss = 0.0, last_loss = 0.0;
  for (int t = 1; t <= 60; ++t) {
    clf.forward(x.data(), n, logits);
    last_loss = nn::softmax_xent<double>(logits, y, n, 2, &dlogits);
    if (t == 1) first_loss = last_loss;
    clf.backward(x.data(), dlogits.data(), n, nullptr);
    clf.weight.adam_update(cfg, t);
    clf.bias.adam_update(cfg, t);
  }
  CHECK(last_loss < first_loss * 0.5);
  clf.forward(x.data(), n, logits);
  int correct = 0;
  for (int i = 0; i < n; ++i)
    correct += nn::argmax_row(logits.data() + static_cast<std::size_t>(i) * 2, 2) == y[i];
  CHECK(correct == n);
  cssl::kernels::reset_backend();
}

TEST_CASE("float and double instantiations agree on a forward pass") {
  cssl::kernels::set_backend("scalar");
  RngStream rng(31);
  nn::Encoder<double> ed(2, 6, {{3, 3, 2}, {4, 3, 2}});
  ed.init(rng);
  nn::Encoder<float> ef(2, 6, {{3, 3, 2}, {4, 3, 2}});
  {
    auto pd = ed.params();
    auto pf = ef.params();
    for (std::size_t t = 0; t < pd.size(); ++t)
      for (std::size_t i = 0; i < pd[t]->size(); ++i)
        pf[t]->w[i] = static_cast<float>(pd[t]->w[i]);
  }
  nn::Slab<double> xd;
  xd.resize(2, 2, 6, 6);
  fill_normal(xd.a, rng);
  nn::Slab<float> xf;
  xf.resize(2, 2, 6, 6);
  for (std::size_t i = 0; i < xd.a.size(); ++i)
    xf.a[i] = static_cast<float>(xd.a[i]);

  std::vector<double> embd;
  std::vector<float> embf;
  ed.forward(xd, embd);
  ef.forward(xf, embf);
  REQUIRE(embd.size() == embf.size());
  for (std::size_t i = 0; i < embd.size(); ++i)
    CHECK(std::abs(embd[i] - static_cast<double>(embf[i])) <=
          1e-4 * (1.0 + std::abs(embd[i])));
  cssl::kernels::reset_backend();
}
