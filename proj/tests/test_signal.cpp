#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <filesystem>
#include <random>

#include "genclean/signal.hpp"

using namespace genclean;

namespace {

Signal make_signal(std::size_t n, double fs, double base = 90.0) {
  Signal s;
  s.fs_hz = fs;
  s.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) s.samples[i] = base + std::sin(0.01 * double(i));
  return s;
}

std::filesystem::path tmp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "genclean_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("segment_signal cuts exact windows") {
  auto s = make_signal(1250, 125.0);
  auto segs = segment_signal(s, 10.0, 10.0);
  REQUIRE(segs.size() == 1);
  CHECK(segs[0].values.size() == 1250);
  CHECK(segs[0].start_index == 0);

  auto s2 = make_signal(1200, 120.0);
  auto segs2 = segment_signal(s2, 10.0, 10.0);
  REQUIRE(segs2.size() == 1);
  CHECK(segs2[0].values.size() == 1200);
}

TEST_CASE("segment_signal honors stride") {
  auto s = make_signal(3000, 120.0);
  auto segs = segment_signal(s, 10.0, 5.0);
  REQUIRE(segs.size() == 4);
  CHECK(segs[0].start_index == 0);
  CHECK(segs[1].start_index == 600);
  CHECK(segs[2].start_index == 1200);
  CHECK(segs[3].start_index == 1800);
  for (auto& seg : segs) CHECK(seg.values.size() == 1200);
}

TEST_CASE("segment_signal edge cases") {
  auto s = make_signal(500, 120.0);
  CHECK(segment_signal(s, 10.0, 10.0).empty());

  auto bad = make_signal(2400, 120.0);
  bad.samples[7] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(segment_signal(bad), Error);
}

TEST_CASE("segment count matches the stride formula") {
  std::mt19937 gen(42);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + gen() % 5000;
    const double fs = 100.0;
    const double window_s = (1 + gen() % 20) * 0.1;
    const double stride_s = (1 + gen() % 20) * 0.1;
    auto s = make_signal(n, fs);
    auto segs = segment_signal(s, window_s, stride_s);
    const auto w = static_cast<long long>(std::llround(window_s * fs));
    const auto st = static_cast<long long>(std::llround(stride_s * fs));
    const long long expect =
        static_cast<long long>(n) >= w ? (static_cast<long long>(n) - w) / st + 1 : 0;
    REQUIRE(segs.size() == static_cast<std::size_t>(expect));
    for (auto& seg : segs)
      for (double v : seg.values) REQUIRE_FALSE(std::isnan(v));
  }
}

TEST_CASE("csv round trip") {
  auto s = make_signal(37, 120.0);
  s.samples[5] = std::numeric_limits<double>::quiet_NaN();
  auto path = tmp_path("sig.csv");
  write_signal(s, path.string(), SignalFormat::Csv);
  auto back = read_signal(path.string(), SignalFormat::Csv);
  CHECK(back.fs_hz == Catch::Approx(120.0).epsilon(1e-9));
  REQUIRE(back.samples.size() == s.samples.size());
  for (std::size_t i = 0; i < s.samples.size(); ++i) {
    if (std::isnan(s.samples[i]))
      CHECK(std::isnan(back.samples[i]));
    else
      CHECK(back.samples[i] == Catch::Approx(s.samples[i]).epsilon(1e-8));
  }

  // NaN serialized as the literal token
  std::ifstream in(path);
  std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(all.find("NaN") != std::string::npos);
}

TEST_CASE("csv rejects malformed input") {
  auto path = tmp_path("bad.csv");
  {
    std::ofstream out(path);
    out << "t_seconds,value\n0,1\n0.008333,2\n0.025,3\n";  // dt jumps 2x
  }
  CHECK_THROWS_WITH(read_signal(path.string(), SignalFormat::Csv),
                    Catch::Matchers::ContainsSubstring("non-uniform sampling"));

  {
    std::ofstream out(path);
    out << "time,value\n0,1\n";
  }
  CHECK_THROWS_WITH(read_signal(path.string(), SignalFormat::Csv),
                    Catch::Matchers::ContainsSubstring("header"));

  {
    std::ofstream out(path);
    out << "t_seconds,value\n0,1\n-0.008,2\n";
  }
  CHECK_THROWS_WITH(read_signal(path.string(), SignalFormat::Csv),
                    Catch::Matchers::ContainsSubstring("non-monotone"));
}

TEST_CASE("raw_f32 round trip is bit exact including NaN") {
  Signal s;
  s.fs_hz = 120.0;
  s.modality = Modality::Ppg;
  s.patient_id = "p07";
  std::mt19937 gen(7);
  for (int i = 0; i < 1200; ++i) {
    float f;
    std::uint32_t bits = gen();
    std::memcpy(&f, &bits, 4);
    if (std::isinf(f)) f = 0.0f;
    s.samples.push_back(std::isnan(f) ? std::numeric_limits<double>::quiet_NaN()
                                      : static_cast<double>(f));
  }
  s.samples[3] = std::numeric_limits<double>::quiet_NaN();

  auto path = tmp_path("sig.f32");
  write_signal(s, path.string(), SignalFormat::RawF32);
  auto back = read_signal(path.string(), SignalFormat::RawF32);
  CHECK(back.fs_hz == 120.0);
  CHECK(back.modality == Modality::Ppg);
  CHECK(back.patient_id == "p07");
  REQUIRE(back.samples.size() == s.samples.size());
  for (std::size_t i = 0; i < s.samples.size(); ++i) {
    const float a = static_cast<float>(s.samples[i]);
    const float b = static_cast<float>(back.samples[i]);
    std::uint32_t ba, bb;
    std::memcpy(&ba, &a, 4);
    std::memcpy(&bb, &b, 4);
    if (std::isnan(a))
      REQUIRE(std::isnan(b));
    else
      REQUIRE(ba == bb);
  }
}

TEST_CASE("raw_f32 error paths") {
  auto path = tmp_path("orphan.f32");
  {
    std::ofstream out(path, std::ios::binary);
    float v = 1.0f;
    out.write(reinterpret_cast<char*>(&v), 4);
  }
  std::filesystem::remove(tmp_path("orphan.json"));
  CHECK_THROWS_WITH(read_signal(path.string(), SignalFormat::RawF32),
                    Catch::Matchers::ContainsSubstring("sidecar"));

  Signal empty;
  empty.fs_hz = 120;
  CHECK_THROWS_WITH(write_signal(empty, tmp_path("e.f32").string(), SignalFormat::RawF32),
                    Catch::Matchers::ContainsSubstring("empty signal"));
}

TEST_CASE("labeled dataset validation") {
  LabeledDataset ds;
  Segment seg;
  seg.values = {1, 2, 3};
  seg.fs_hz = 120;
  ds.entries.push_back({seg, Split::Test});
  CHECK_THROWS_AS(ds.validate(), Error);
  ds.entries[0].segment.label = Label::Clean;
  CHECK_NOTHROW(ds.validate());
}
