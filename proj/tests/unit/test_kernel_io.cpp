#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "dmft_sgd/errors.hpp"
#include "dmft_sgd/fixed_point.hpp"
#include "dmft_sgd/kernel_io.hpp"

using namespace dmft_sgd;

TEST(KernelIo, StateRoundTripIsBitExact) {
    const ModelSpec spec = single_index_spec(Activation::Linear, Loss{}, TeacherKind::Identity, 0.8, 0.8, 0.1);
    const DMFTState st = solve(spec, TimeGrid::make(1.0, 0.05), {}).state;
    const auto path = std::filesystem::temp_directory_path() / "dmft_sgd_state_roundtrip.bin";
    save_state(path.string(), st);
    const DMFTState back = load_state(path.string());
    EXPECT_TRUE(back == st);
    std::filesystem::remove(path);
}

TEST(KernelIo, RecordsRoundTrip) {
    const TimeGrid g = TimeGrid::make(0.5, 0.25);
    TwoTimeKernel R(g, 2, 2, KernelKind::Response);
    R(2, 0, 1, 1) = -3.5;
    TimeSeriesBlocks S(g, 2, 1);
    S(1, 1, 0) = 1e-300;
    Eigen::MatrixXd M(2, 3);
    M << 1, 2, 3, 4, 5, 6;
    std::stringstream ss;
    write_records(ss, {to_record("R", R), to_record("S", S), to_record("M", M, g)});
    const auto recs = read_records(ss);
    ASSERT_EQ(recs.size(), 3u);
    EXPECT_EQ(recs[0].name, "R");
    EXPECT_EQ(recs[0].kind, RecordKind::ResponseKernel);
    EXPECT_TRUE(kernel_from_record(recs[0]) == R);
    EXPECT_TRUE(series_from_record(recs[1]) == S);
    EXPECT_EQ(matrix_from_record(recs[2]), M);
    EXPECT_THROW(series_from_record(recs[0]), InvalidInput);
}

namespace {

// Re-encodes a container in the opposite byte order, field by field.
std::string byte_swapped(const std::string& in) {
    std::string out = in;
    std::size_t pos = 8;
    auto swap = [&](std::size_t width) {
        std::reverse(out.begin() + static_cast<long>(pos), out.begin() + static_cast<long>(pos + width));
        pos += width;
    };
    auto read_u32 = [&](std::size_t at) {
        std::uint32_t v;
        std::memcpy(&v, in.data() + at, 4);
        return v;
    };
    auto read_u64 = [&](std::size_t at) {
        std::uint64_t v;
        std::memcpy(&v, in.data() + at, 8);
        return v;
    };
    swap(4);
    swap(4);
    const std::uint32_t count = read_u32(pos);
    swap(4);
    for (std::uint32_t r = 0; r < count; ++r) {
        pos += 1;
        const std::uint32_t len = read_u32(pos);
        swap(4);
        pos += len;
        swap(8);
        swap(4);
        swap(4);
        swap(8);
        swap(8);
        const std::uint64_t n = read_u64(pos);
        swap(8);
        for (std::uint64_t i = 0; i < n; ++i) swap(8);
    }
    return out;
}

}  // namespace

TEST(KernelIo, ReadsOppositeByteOrder) {
    const TimeGrid g = TimeGrid::make(0.5, 0.25);
    TwoTimeKernel C(g, 1, 2, KernelKind::Covariance);
    for (std::size_t i = 0; i < C.data().size(); ++i) C.data()[i] = 0.1 * static_cast<double>(i) - 1.0;
    std::stringstream ss;
    write_records(ss, {to_record("C_theta", C)});
    std::stringstream swapped(byte_swapped(ss.str()));
    const auto recs = read_records(swapped);
    ASSERT_EQ(recs.size(), 1u);
    EXPECT_TRUE(kernel_from_record(recs[0]) == C);
}

TEST(KernelIo, RejectsForeignOrTruncatedInput) {
    std::stringstream bad("NOTAKERNELFILE");
    EXPECT_ANY_THROW(read_records(bad));
    const TimeGrid g = TimeGrid::make(0.5, 0.25);
    std::stringstream ss;
    write_records(ss, {to_record("C", TwoTimeKernel(g, 1, 1, KernelKind::Covariance))});
    std::string bytes = ss.str();
    bytes.resize(bytes.size() - 5);
    std::stringstream cut(bytes);
    EXPECT_ANY_THROW(read_records(cut));
}
