#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "osr/dataio.hpp"
#include "osr/evt.hpp"
#include "osr/ndcore.hpp"
#include "support/oracles.hpp"

using namespace osr;
using namespace osr::dataio;

namespace {

void write_raw(const std::filesystem::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

SyntheticSpec three_class_spec(std::size_t per_class, std::uint64_t seed) {
  SyntheticSpec s;
  s.class_count = 3;
  s.dimension = 4;
  s.means = {{4, 0, 0, 0}, {0, 4, 0, 0}, {0, 0, 4, 0}};
  s.scales = {1.0, 0.5, 2.0};
  s.samples_per_class = per_class;
  s.ood = {{0, 0, 0, 20}, 1.0, 50};
  s.seed = seed;
  return s;
}

}  // namespace

TEST(Idx, HandcraftedImagesScaleToUnitInterval) {
  const auto dir = oracle::scratch_dir("idx-hand");
  // magic 0x00000803, dims 2 x 2 x 2, pixels.
  write_raw(dir / "img", {0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2, 0, 255, 255, 0, 255, 255, 0, 0});
  const auto t = read_idx(dir / "img");
  EXPECT_EQ(t.shape(), (Tensor::Shape{2, 2, 2}));
  EXPECT_EQ(t.values(), (std::vector<double>{0, 1, 1, 0, 1, 1, 0, 0}));

  write_raw(dir / "lab", {0, 0, 8, 1, 0, 0, 0, 2, 7, 3});
  const auto labels = read_idx(dir / "lab");
  EXPECT_EQ(labels.values(), (std::vector<double>{7, 3}));

  const auto ds = load_idx_dataset("hand", dir / "img", dir / "lab", 10, SplitTag::test);
  EXPECT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.input_dim(), 4u);
  EXPECT_EQ(ds.example_shape, (Tensor::Shape{2, 2}));
  EXPECT_EQ(ds.labels, (std::vector<int>{7, 3}));
}

TEST(Idx, MalformedFiles) {
  const auto dir = oracle::scratch_dir("idx-bad");
  write_raw(dir / "trunc", {0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2, 0, 255, 255});
  EXPECT_THROW(read_idx(dir / "trunc"), TruncatedPayload);
  write_raw(dir / "short-header", {0, 0, 8, 3, 0, 0});
  EXPECT_THROW(read_idx(dir / "short-header"), TruncatedPayload);
  write_raw(dir / "magic", {0, 0, 9, 3, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 5});
  EXPECT_THROW(read_idx(dir / "magic"), BadMagic);
  write_raw(dir / "huge", {0, 0, 8, 3, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff});
  EXPECT_THROW(read_idx(dir / "huge"), DimensionOverflow);
  EXPECT_THROW(read_idx(dir / "missing"), IoError);

  write_idx(dir / "img", {3, 2, 2}, std::vector<std::uint8_t>(12, 9));
  write_idx(dir / "lab", {2}, {1, 2});
  EXPECT_THROW(load_idx_dataset("x", dir / "img", dir / "lab", 10, SplitTag::train), InvalidArgument);
  write_idx(dir / "lab-range", {3}, {1, 2, 11});
  EXPECT_THROW(load_idx_dataset("x", dir / "img", dir / "lab-range", 10, SplitTag::train), InvalidArgument);
}

TEST(Idx, WriteReadRoundTrip) {
  const auto dir = oracle::scratch_dir("idx-rt");
  std::vector<std::uint8_t> px(5 * 3 * 4);
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<std::uint8_t>(i * 37 % 256);
  write_idx(dir / "img", {5, 3, 4}, px);
  const auto block = read_idx_block(dir / "img");
  EXPECT_EQ(block.dims, (std::vector<std::size_t>{5, 3, 4}));
  EXPECT_EQ(block.values, px);
}

TEST(Synthetic, TinyScaleCollapsesToMean) {
  SyntheticSpec s;
  s.class_count = 1;
  s.dimension = 3;
  s.means = {{1.0, -2.0, 0.5}};
  s.scales = {1e-300};
  s.samples_per_class = 20;
  s.ood = {{10, 10, 10}, 1e-300, 5};
  const auto [in, ood] = make_synthetic(s);
  for (std::size_t i = 0; i < in.size(); ++i) {
    for (std::size_t d = 0; d < 3; ++d) EXPECT_EQ(in.inputs.at(i, d), s.means[0][d]);
  }
  EXPECT_EQ(ood.size(), 5u);
  EXPECT_FALSE(ood.has_labels());
}

TEST(Synthetic, DeterministicForSeed) {
  const auto a = make_synthetic(three_class_spec(50, 3));
  const auto b = make_synthetic(three_class_spec(50, 3));
  EXPECT_EQ(a.first.inputs, b.first.inputs);
  EXPECT_EQ(a.first.labels, b.first.labels);
  EXPECT_EQ(a.second.inputs, b.second.inputs);
  const auto c = make_synthetic(three_class_spec(50, 4));
  EXPECT_NE(a.first.inputs, c.first.inputs);
}

TEST(Synthetic, EmpiricalMeansMatchSpec) {
  const auto spec = three_class_spec(500, 5);
  const auto [in, ood] = make_synthetic(spec);
  for (int c = 0; c < 3; ++c) {
    std::vector<double> sum(4, 0.0);
    for (std::size_t i = 0; i < in.size(); ++i) {
      if (in.labels[i] != c) continue;
      for (int d = 0; d < 4; ++d) sum[d] += in.inputs.at(i, d) / 500.0;
    }
    for (int d = 0; d < 4; ++d) EXPECT_NEAR(sum[d], spec.means[c][d], 4 * spec.scales[c] / std::sqrt(500.0));
  }
}

TEST(Synthetic, SpecValidation) {
  auto s = three_class_spec(10, 1);
  s.ood.mean = {4, 0, 0, 1};
  EXPECT_THROW(make_synthetic(s), InvalidArgument);
  s = three_class_spec(10, 1);
  s.means[1] = s.means[0];
  EXPECT_THROW(make_synthetic(s), InvalidArgument);
  s = three_class_spec(10, 1);
  s.scales[0] = 0.0;
  EXPECT_THROW(make_synthetic(s), InvalidArgument);
  s = three_class_spec(10, 1);
  const auto back = synthetic_spec_from_json(to_json(s));
  EXPECT_EQ(make_synthetic(back).first.inputs, make_synthetic(s).first.inputs);
}

TEST(Split, SizesAndDeterminism) {
  Dataset ds{"d", {1}, Tensor({100, 1}), {}, 4, SplitTag::train};
  for (std::size_t i = 0; i < 100; ++i) {
    ds.inputs[i] = static_cast<double>(i);
    ds.labels.push_back(static_cast<int>(i % 4));
  }
  const auto [train, val] = split(ds, 0.2, 17);
  EXPECT_EQ(train.size(), 80u);
  EXPECT_EQ(val.size(), 20u);
  EXPECT_EQ(val.split, SplitTag::val);
  const auto again = split(ds, 0.2, 17);
  EXPECT_EQ(again.second.inputs, val.inputs);
  EXPECT_NE(split(ds, 0.2, 18).second.inputs, val.inputs);

  std::set<double> seen;
  for (double v : train.inputs.data()) seen.insert(v);
  for (double v : val.inputs.data()) seen.insert(v);
  EXPECT_EQ(seen.size(), 100u);
  EXPECT_TRUE(std::is_sorted(val.inputs.data().begin(), val.inputs.data().end()));
}

TEST(Split, StratifiedCounts) {
  const std::vector<std::size_t> sizes{37, 100, 3, 60};
  Dataset ds{"d", {1}, Tensor({200, 1}), {}, 4, SplitTag::train};
  for (std::size_t c = 0, row = 0; c < sizes.size(); ++c) {
    for (std::size_t i = 0; i < sizes[c]; ++i, ++row) ds.labels.push_back(static_cast<int>(c));
  }
  const double f = 0.15;
  const auto [train, val] = split(ds, f, 5);
  std::size_t total = 0;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    const auto n = static_cast<std::size_t>(std::count(val.labels.begin(), val.labels.end(), static_cast<int>(c)));
    const double exact = f * static_cast<double>(sizes[c]);
    EXPECT_TRUE(n == static_cast<std::size_t>(std::floor(exact)) || n == static_cast<std::size_t>(std::ceil(exact)))
        << "class " << c << " got " << n;
    total += n;
  }
  EXPECT_EQ(total, static_cast<std::size_t>(std::llround(f * 200)));
  EXPECT_THROW(split(ds, 0.0, 1), InvalidArgument);
}

TEST(Embeddings, EmptyRoundTrip) {
  const auto dir = oracle::scratch_dir("emb-empty");
  Embeddings e{{}, Tensor({0, 4}), {}, {}};
  export_embeddings(dir / "e.bin", e);
  EXPECT_EQ(std::filesystem::file_size(dir / "e.bin"), 8u + 4u + 8u + 8u);
  const auto back = import_embeddings(dir / "e.bin");
  EXPECT_EQ(back.size(), 0u);
  EXPECT_EQ(back.latent_dim(), 4u);
}

TEST(Embeddings, RecordsRoundTripBitExact) {
  const auto dir = oracle::scratch_dir("emb-3");
  Embeddings e{{0, 7, 1ull << 40},
               Tensor({3, 2}, std::vector<double>{0.1, -0.0, 1e-310, 3.0 / 7.0, -1e300, 42.0}),
               {0, 2, -1},
               {0, 1, 2}};
  export_embeddings(dir / "e.bin", e);
  const auto back = import_embeddings(dir / "e.bin");
  EXPECT_EQ(back, e);
  EXPECT_TRUE(std::signbit(back.latents.at(0, 1)));
  EXPECT_EQ(encode_embeddings(back), encode_embeddings(e));

  const auto bytes = encode_embeddings(e);
  EXPECT_THROW(decode_embeddings(io::ByteReader(bytes.substr(0, bytes.size() - 1), "mem")), TruncatedPayload);
  EXPECT_THROW(decode_embeddings(io::ByteReader(bytes + "x", "mem")), IoError);
}

TEST(Embeddings, EvtFitFromFileEqualsInMemory) {
  const auto dir = oracle::scratch_dir("emb-evt");
  Rng rng(8);
  Embeddings e;
  e.latents = Tensor({600, 3});
  for (std::size_t i = 0; i < 600; ++i) {
    const int c = static_cast<int>(i % 3);
    e.ids.push_back(i);
    e.labels.push_back(c);
    e.predictions.push_back(i % 29 == 0 ? (c + 1) % 3 : c);
    for (std::size_t d = 0; d < 3; ++d) e.latents.at(i, d) = rng.normal() + (static_cast<int>(d) == c ? 3.0 : 0.0);
  }
  export_embeddings(dir / "e.bin", e);
  const auto back = import_embeddings(dir / "e.bin");
  const evt::EvtConfig cfg;
  const auto a = evt::fit_openset(e.latents, e.labels, e.predictions, 3, cfg);
  const auto b = evt::fit_openset(back.latents, back.labels, back.predictions, 3, cfg);
  for (int c = 0; c < 3; ++c) {
    for (std::size_t d = 0; d < 3; ++d) EXPECT_NEAR(a[c].mean[d], b[c].mean[d], 1e-15);
    EXPECT_NEAR(a[c].tau, b[c].tau, 1e-15);
    EXPECT_NEAR(a[c].kappa, b[c].kappa, 1e-15);
    EXPECT_NEAR(a[c].lambda, b[c].lambda, 1e-15);
  }
}

TEST(Dataset, SubsetHeadAndValidation) {
  Dataset ds{"d", {2}, Tensor({3, 2}, std::vector<double>{1, 2, 3, 4, 5, 6}), {0, 1, 0}, 2, SplitTag::train};
  EXPECT_NO_THROW(ds.validate());
  const auto h = ds.head(2);
  EXPECT_EQ(h.inputs.values(), (std::vector<double>{1, 2, 3, 4}));
  EXPECT_EQ(h.labels, (std::vector<int>{0, 1}));
  ds.labels[2] = 5;
  EXPECT_THROW(ds.validate(), InvalidArgument);
  ds.labels[2] = 0;
  ds.inputs[0] = NAN;
  EXPECT_THROW(ds.validate(), NonFiniteValue);
}
