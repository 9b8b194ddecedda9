#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dmft_sgd/dmft_state.hpp"
#include "dmft_sgd/kernel.hpp"

namespace dmft_sgd {

// Kernel container layout (all integers unsigned, native byte order, the
// endianness tag tells a reader whether to swap):
//   "DMFTSGD\0" | u32 version (1) | u32 0x01020304 | u32 record count
//   per record: u8 kind | u32 name length | name | u64 N | u32 rows | u32 cols
//               | f64 T | f64 delta | u64 payload length | f64 payload
// Payloads are the in-memory row-major arrays, so round trips are bit-exact.

enum class RecordKind : unsigned char { CovarianceKernel = 0, ResponseKernel = 1, TimeSeries = 2, Matrix = 3 };

struct KernelRecord {
    RecordKind kind = RecordKind::Matrix;
    std::string name;
    TimeGrid grid{};
    int rows = 0;
    int cols = 0;
    std::vector<double> payload;
};

KernelRecord to_record(const std::string& name, const TwoTimeKernel& k);
KernelRecord to_record(const std::string& name, const TimeSeriesBlocks& b);
KernelRecord to_record(const std::string& name, const Eigen::MatrixXd& m, const TimeGrid& grid);

TwoTimeKernel kernel_from_record(const KernelRecord& r);
TimeSeriesBlocks series_from_record(const KernelRecord& r);
Eigen::MatrixXd matrix_from_record(const KernelRecord& r);

void write_records(std::ostream& os, const std::vector<KernelRecord>& records);
/// Throws InvalidInput on a bad magic, unknown version or truncated data.
std::vector<KernelRecord> read_records(std::istream& is);

void save_state(const std::string& path, const DMFTState& state);
DMFTState load_state(const std::string& path);

}  // namespace dmft_sgd
