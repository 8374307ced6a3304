#include "thpi/dataset_io.hpp"
#include "thpi/error.hpp"
#include "thpi/itq_plus.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <set>

namespace thpi {
namespace {

std::vector<std::uint8_t> bin_header(std::uint8_t version, std::uint32_t rows, std::uint32_t cols) {
  std::vector<std::uint8_t> b{0x54, 0x48, 0x50, 0x49, version};
  for (std::uint32_t v : {rows, cols})
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  return b;
}

void push_f64(std::vector<std::uint8_t>& b, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

TEST(Csv, ParsesTwoByTwo) {
  const DataMatrix m = parse_csv_matrix("1.0,2.0\n3.0,4.0");
  ASSERT_EQ(m.rows(), 2);
  ASSERT_EQ(m.cols(), 2);
  EXPECT_EQ(m.values()(0, 0), 1.0);
  EXPECT_EQ(m.values()(0, 1), 2.0);
  EXPECT_EQ(m.values()(1, 0), 3.0);
  EXPECT_EQ(m.values()(1, 1), 4.0);
}

TEST(Csv, HeaderSkippedOnRequest) {
  const DataMatrix m = parse_csv_matrix("a,b\n1,2\n", true);
  EXPECT_EQ(m.rows(), 1);
  EXPECT_THROW(parse_csv_matrix("a,b\n1,2\n"), DataError);
}

TEST(Csv, ErrorsNameTheLine) {
  try {
    parse_csv_matrix("1,2\n3\n");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  try {
    parse_csv_matrix("1,2\n3,x\n");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_csv_matrix(""), DataError);
  EXPECT_THROW(parse_csv_matrix("1,nan\n"), DataError);
}

TEST(ThpiBin, HeaderWithZeroPayload) {
  auto bytes = bin_header(0x01, 1, 3);
  for (int i = 0; i < 3; ++i) push_f64(bytes, 0.0);
  const DataMatrix m = parse_thpi_bin(bytes);
  ASSERT_EQ(m.rows(), 1);
  ASSERT_EQ(m.cols(), 3);
  EXPECT_TRUE(m.values().isZero(0.0));
}

TEST(ThpiBin, LayoutIsLittleEndianRowMajor) {
  const DataMatrix m{{1.5, -2.0}, {3.25, 4.0}};
  const auto bytes = to_thpi_bin(m);
  auto expected = bin_header(0x01, 2, 2);
  for (double v : {1.5, -2.0, 3.25, 4.0}) push_f64(expected, v);
  EXPECT_EQ(bytes, expected);
}

TEST(ThpiBin, MalformedInputsReportOffsets) {
  auto bytes = bin_header(0x01, 2, 2);
  push_f64(bytes, 1.0);
  try {
    parse_thpi_bin(bytes);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("offset"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_thpi_bin(bin_header(0x02, 0, 0)), DataError);
  std::vector<std::uint8_t> junk{'N', 'O', 'P', 'E', 1};
  EXPECT_THROW(parse_thpi_bin(junk), DataError);
  EXPECT_THROW(parse_thpi_bin(std::vector<std::uint8_t>{0x54, 0x48}), DataError);
}

TEST(MatrixFiles, RoundTripIsBitExactInBothFormats) {
  test::TempDir dir("io");
  Matrix values = test::gaussian(17, 5, 4, 1e3);
  values(0, 0) = 0.1;
  values(1, 1) = -0.0;
  values(2, 2) = 1e-310;
  const DataMatrix m(values);
  for (MatrixFormat f : {MatrixFormat::csv, MatrixFormat::thpi_bin}) {
    const auto path = dir / (f == MatrixFormat::csv ? "m.csv" : "m.bin");
    save_matrix(path, m, f);
    const std::string first = test::read_file(path);
    const DataMatrix back = load_matrix(path, f);
    EXPECT_EQ(std::memcmp(back.values().data(), m.values().data(),
                          sizeof(double) * static_cast<std::size_t>(m.values().size())),
              0);
    save_matrix(path, back, f);
    EXPECT_EQ(test::read_file(path), first);
  }
}

TEST(MatrixFiles, FormatFromExtension) {
  EXPECT_EQ(format_from_path("a/b.csv"), MatrixFormat::csv);
  EXPECT_EQ(format_from_path("a/b.bin"), MatrixFormat::thpi_bin);
  EXPECT_EQ(parse_format("thpi-bin"), MatrixFormat::thpi_bin);
  EXPECT_THROW(parse_format("hdf5"), ConfigError);
  EXPECT_THROW(load_matrix("/nonexistent/file.bin", MatrixFormat::thpi_bin), DataError);
}

TEST(ZeroCenter, SymmetricPair) {
  const auto [c, info] = zero_center(DataMatrix{{1, 1}, {3, 3}});
  EXPECT_EQ(c, (DataMatrix{{-1, -1}, {1, 1}}));
  EXPECT_EQ(info.mean(0), 2.0);
  EXPECT_EQ(info.mean(1), 2.0);
}

TEST(ZeroCenter, ColumnSumsVanishAndSecondPassIsFixedPoint) {
  const DataMatrix x = test::gaussian_data(50, 4, 8, 10.0);
  const auto [c, info] = zero_center(x);
  for (Index j = 0; j < c.cols(); ++j) {
    double s = 0.0;
    for (Index i = 0; i < c.rows(); ++i) s += c.values()(i, j);
    EXPECT_LT(std::abs(s), 1e-9);
  }
  const auto [c2, info2] = zero_center(c);
  EXPECT_LT(info2.mean.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_TRUE(c2.values().isApprox(c.values(), 1e-12));
}

TEST(ApplyCentering, UsesRecordedMean) {
  const auto [c, info] = zero_center(DataMatrix{{0, 2}, {2, 4}});
  const DataMatrix q = apply_centering(DataMatrix{{1, 1}}, info);
  EXPECT_EQ(q, (DataMatrix{{0, -2}}));
  EXPECT_THROW(apply_centering(DataMatrix{{1, 1, 1}}, info), DataError);
}

TEST(DataMatrix, RejectsNonFiniteValues) {
  Matrix m = Matrix::Zero(2, 2);
  m(1, 0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(DataMatrix{m}, NumericalError);
}

DataMatrix indexed(Index n, Index d, double offset) {
  Matrix m(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) m(i, j) = offset + static_cast<double>(i);
  return DataMatrix(m);
}

TEST(MakeSplit, TenPairsHalfAlpha) {
  const SplitBundle s = make_split(indexed(10, 3, 0), indexed(10, 2, 100), 0.5, 0.0, 1);
  EXPECT_EQ(s.target_train.rows(), 5);
  EXPECT_EQ(s.source_corr.rows(), 5);
  EXPECT_EQ(s.source_extra.rows(), 5);
  EXPECT_EQ(s.target_test.rows(), 0);
  EXPECT_DOUBLE_EQ(s.realized_alpha(), 0.5);
}

TEST(MakeSplit, AlphaOneLeavesNoExtraRows) {
  const SplitBundle s = make_split(indexed(10, 3, 0), indexed(10, 2, 100), 1.0, 0.0, 1);
  EXPECT_TRUE(s.source_extra.empty());
  EXPECT_EQ(s.target_train.rows(), 10);
}

TEST(MakeSplit, PartitionsOriginsAndKeepsPairsAligned) {
  const Index n = 97;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const SplitBundle s = make_split(indexed(n, 3, 0), indexed(n, 2, 1000), 0.3, 0.1, seed);
    std::set<Index> all;
    for (const auto* v : {&s.corr_origin, &s.extra_origin, &s.test_origin}) {
      for (Index i : *v) EXPECT_TRUE(all.insert(i).second) << "row " << i << " reused";
    }
    EXPECT_EQ(static_cast<Index>(all.size()), n);
    for (Index i = 0; i < s.target_train.rows(); ++i) {
      EXPECT_EQ(s.target_train.values()(i, 0) + 1000.0, s.source_corr.values()(i, 0));
      EXPECT_EQ(s.target_train.values()(i, 0), static_cast<double>(s.corr_origin[static_cast<std::size_t>(i)]));
    }
    const double pool = static_cast<double>(s.corr_origin.size() + s.extra_origin.size());
    EXPECT_LE(std::abs(s.realized_alpha() - 0.3), 1.0 / pool);
    EXPECT_EQ(s.target_database.rows(), static_cast<Index>(pool));
  }
}

TEST(MakeSplit, DeterministicPerSeedAndVariesAcrossSeeds) {
  const DataMatrix t = indexed(60, 2, 0), src = indexed(60, 2, 0);
  const SplitBundle a = make_split(t, src, 0.5, 0.1, 42);
  const SplitBundle b = make_split(t, src, 0.5, 0.1, 42);
  EXPECT_EQ(a.corr_origin, b.corr_origin);
  EXPECT_EQ(a.test_origin, b.test_origin);
  EXPECT_EQ(a.target_train, b.target_train);
  int differing = 0;
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    differing += make_split(t, src, 0.5, 0.1, seed).corr_origin != a.corr_origin;
  }
  EXPECT_EQ(differing, 20);
}

TEST(MakeSplit, RejectsBadParameters) {
  const DataMatrix t = indexed(10, 2, 0);
  EXPECT_THROW(make_split(t, t, 0.0, 0.1, 0), ConfigError);
  EXPECT_THROW(make_split(t, t, 1.5, 0.1, 0), ConfigError);
  EXPECT_THROW(make_split(t, t, 0.5, 1.0, 0), ConfigError);
  EXPECT_THROW(make_split(t, t, 0.01, 0.0, 0), ConfigError);
  EXPECT_THROW(make_split(t, indexed(9, 2, 0), 0.5, 0.1, 0), DataError);
}

TEST(ModelFile, IdentityModelRoundTrips) {
  HashModel m;
  m.method = Method::itq;
  m.centering.mean = Vector::Zero(3);
  m.preprocessing = LinearProjection::identity(3);
  m.rotation = Matrix::Identity(3, 2);
  m.bits = 2;
  const HashModel back = deserialize_model(serialize_model(m));
  EXPECT_EQ(back, m);
}

TEST(ModelFile, TrainedItqPlusModelReevaluatesToSameObjective) {
  test::TempDir dir("model");
  const DataMatrix xt = test::gaussian_data(40, 6, 1);
  const DataMatrix xs = test::gaussian_data(40, 5, 2);
  ItqPlusOptions opts;
  opts.iters = 10;
  auto [model, state] = itq_plus_train(xt, xs, 4, 0.1, opts);
  save_model(model, dir / "m.thpi");
  const HashModel back = load_model(dir / "m.thpi");
  EXPECT_EQ(back, model);
  const Matrix xtc = test::centered(xt.values()), xsc = test::centered(xs.values());
  EXPECT_EQ(itq_plus_objective(state.b, back.rotation, state.p.values(), xtc, xsc, 0.1),
            itq_plus_objective(state.b, model.rotation, state.p.values(), xtc, xsc, 0.1));
  save_model(back, dir / "m2.thpi");
  EXPECT_EQ(test::read_file(dir / "m.thpi"), test::read_file(dir / "m2.thpi"));
}

TEST(ModelFile, WrongMagicOrVersionIsVersionMismatch) {
  HashModel m;
  m.centering.mean = Vector::Zero(2);
  m.preprocessing = LinearProjection::identity(2);
  m.rotation = Matrix::Identity(2, 1);
  m.bits = 1;
  auto bytes = serialize_model(m);
  for (std::size_t at : {std::size_t{0}, std::size_t{4}}) {
    auto bad = bytes;
    bad[at] ^= 0xff;
    try {
      deserialize_model(bad);
      FAIL();
    } catch (const DataError& e) {
      EXPECT_NE(std::string(e.what()).find("version mismatch"), std::string::npos) << e.what();
    }
  }
  EXPECT_THROW(deserialize_model(to_thpi_bin(DataMatrix{{1.0}})), DataError);
}

TEST(ModelFile, TruncationIsReported) {
  HashModel m;
  m.centering.mean = Vector::Zero(2);
  m.preprocessing = LinearProjection::identity(2);
  m.rotation = Matrix::Identity(2, 1);
  m.bits = 1;
  const auto bytes = serialize_model(m);
  for (std::size_t len = 0; len < bytes.size(); len += 7) {
    std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + static_cast<long>(len));
    EXPECT_THROW(deserialize_model(cut), DataError) << "length " << len;
  }
}

}  // namespace
}  // namespace thpi
