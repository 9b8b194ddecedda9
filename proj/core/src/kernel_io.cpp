#include "dmft_sgd/kernel_io.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "dmft_sgd/errors.hpp"

namespace dmft_sgd {

namespace {

constexpr std::array<char, 8> kMagic{'D', 'M', 'F', 'T', 'S', 'G', 'D', '\0'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kEndianTag = 0x01020304u;

template <typename T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

class Reader {
public:
    explicit Reader(std::istream& is) : is_(is) {}

    void set_swap(bool s) { swap_ = s; }

    template <typename T>
    T get() {
        std::array<char, sizeof(T)> buf;
        raw(buf.data(), buf.size());
        if (swap_) std::reverse(buf.begin(), buf.end());
        T v;
        std::memcpy(&v, buf.data(), sizeof v);
        return v;
    }

    void raw(char* dst, std::size_t n) {
        is_.read(dst, static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(is_.gcount()) != n) throw InvalidInput("kernel container is truncated");
    }

private:
    std::istream& is_;
    bool swap_ = false;
};

void check_payload(const KernelRecord& r, std::size_t expected) {
    if (r.payload.size() != expected)
        throw InvalidInput("record '" + r.name + "' has " + std::to_string(r.payload.size()) + " values, expected " +
                           std::to_string(expected));
}

}  // namespace

KernelRecord to_record(const std::string& name, const TwoTimeKernel& k) {
    return {k.kind() == KernelKind::Covariance ? RecordKind::CovarianceKernel : RecordKind::ResponseKernel, name,
            k.grid(), k.rows(), k.cols(), k.data()};
}

KernelRecord to_record(const std::string& name, const TimeSeriesBlocks& b) {
    return {RecordKind::TimeSeries, name, b.grid(), b.rows(), b.cols(), b.data()};
}

KernelRecord to_record(const std::string& name, const Eigen::MatrixXd& m, const TimeGrid& grid) {
    KernelRecord r{RecordKind::Matrix, name, grid, static_cast<int>(m.rows()), static_cast<int>(m.cols()), {}};
    r.payload.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) r.payload.push_back(m(i, j));
    return r;
}

TwoTimeKernel kernel_from_record(const KernelRecord& r) {
    if (r.kind != RecordKind::CovarianceKernel && r.kind != RecordKind::ResponseKernel)
        throw InvalidInput("record '" + r.name + "' is not a two-time kernel");
    TwoTimeKernel k(r.grid, r.rows, r.cols,
                    r.kind == RecordKind::CovarianceKernel ? KernelKind::Covariance : KernelKind::Response);
    check_payload(r, k.data().size());
    k.data() = r.payload;
    return k;
}

TimeSeriesBlocks series_from_record(const KernelRecord& r) {
    if (r.kind != RecordKind::TimeSeries) throw InvalidInput("record '" + r.name + "' is not a time series");
    TimeSeriesBlocks b(r.grid, r.rows, r.cols);
    check_payload(r, b.data().size());
    b.data() = r.payload;
    return b;
}

Eigen::MatrixXd matrix_from_record(const KernelRecord& r) {
    if (r.kind != RecordKind::Matrix) throw InvalidInput("record '" + r.name + "' is not a matrix");
    check_payload(r, static_cast<std::size_t>(r.rows) * static_cast<std::size_t>(r.cols));
    Eigen::MatrixXd m(r.rows, r.cols);
    for (int i = 0; i < r.rows; ++i)
        for (int j = 0; j < r.cols; ++j) m(i, j) = r.payload[static_cast<std::size_t>(i * r.cols + j)];
    return m;
}

void write_records(std::ostream& os, const std::vector<KernelRecord>& records) {
    os.write(kMagic.data(), kMagic.size());
    put<std::uint32_t>(os, kVersion);
    put<std::uint32_t>(os, kEndianTag);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(records.size()));
    for (const auto& r : records) {
        put<std::uint8_t>(os, static_cast<std::uint8_t>(r.kind));
        put<std::uint32_t>(os, static_cast<std::uint32_t>(r.name.size()));
        os.write(r.name.data(), static_cast<std::streamsize>(r.name.size()));
        put<std::uint64_t>(os, r.grid.N);
        put<std::uint32_t>(os, static_cast<std::uint32_t>(r.rows));
        put<std::uint32_t>(os, static_cast<std::uint32_t>(r.cols));
        put<double>(os, r.grid.T);
        put<double>(os, r.grid.delta);
        put<std::uint64_t>(os, r.payload.size());
        os.write(reinterpret_cast<const char*>(r.payload.data()),
                 static_cast<std::streamsize>(r.payload.size() * sizeof(double)));
    }
    if (!os) throw InvalidInput("failed writing kernel container");
}

std::vector<KernelRecord> read_records(std::istream& is) {
    Reader in(is);
    std::array<char, 8> magic{};
    in.raw(magic.data(), magic.size());
    if (magic != kMagic) throw InvalidInput("not a kernel container (bad magic)");
    const auto version_raw = in.get<std::uint32_t>();
    const auto tag = in.get<std::uint32_t>();
    std::uint32_t version = version_raw;
    if (tag == 0x04030201u) {
        in.set_swap(true);
        version = __builtin_bswap32(version_raw);
    } else if (tag != kEndianTag) {
        throw InvalidInput("kernel container has an unknown endianness tag");
    }
    if (version != kVersion) throw InvalidInput("unsupported kernel container version " + std::to_string(version));
    const auto count = in.get<std::uint32_t>();
    std::vector<KernelRecord> out;
    for (std::uint32_t i = 0; i < count; ++i) {
        KernelRecord r;
        const auto kind = in.get<std::uint8_t>();
        if (kind > 3) throw InvalidInput("unknown record kind " + std::to_string(kind));
        r.kind = static_cast<RecordKind>(kind);
        const auto len = in.get<std::uint32_t>();
        if (len > 4096) throw InvalidInput("record name too long");
        r.name.resize(len);
        in.raw(r.name.data(), len);
        r.grid.N = static_cast<std::size_t>(in.get<std::uint64_t>());
        r.rows = static_cast<int>(in.get<std::uint32_t>());
        r.cols = static_cast<int>(in.get<std::uint32_t>());
        r.grid.T = in.get<double>();
        r.grid.delta = in.get<double>();
        const auto n = in.get<std::uint64_t>();
        if (n > (std::uint64_t{1} << 34)) throw InvalidInput("record '" + r.name + "' payload too large");
        r.payload.resize(static_cast<std::size_t>(n));
        for (auto& v : r.payload) v = in.get<double>();
        out.push_back(std::move(r));
    }
    return out;
}

void save_state(const std::string& path, const DMFTState& s) {
    const TimeGrid& g = s.grid();
    const std::vector<KernelRecord> records{
        to_record("C_theta", s.theta.C_theta),        to_record("C_theta_star", s.theta.C_theta_star),
        to_record("C_star_star", s.theta.C_star_star, g), to_record("R_theta", s.theta.R_theta),
        to_record("C_f", s.xi.C_f),                   to_record("R_f", s.xi.R_f),
        to_record("R_f_star", s.xi.R_f_star),         to_record("Gamma", s.xi.Gamma)};
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InvalidInput("cannot open '" + path + "' for writing");
    write_records(os, records);
}

DMFTState load_state(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InvalidInput("cannot open '" + path + "'");
    std::map<std::string, KernelRecord> by_name;
    for (auto& r : read_records(is)) by_name[r.name] = std::move(r);
    auto need = [&](const char* name) -> const KernelRecord& {
        const auto it = by_name.find(name);
        if (it == by_name.end()) throw InvalidInput(path + ": missing record '" + name + "'");
        return it->second;
    };
    DMFTState s;
    s.theta.C_theta = kernel_from_record(need("C_theta"));
    s.theta.C_theta_star = series_from_record(need("C_theta_star"));
    s.theta.C_star_star = matrix_from_record(need("C_star_star"));
    s.theta.R_theta = kernel_from_record(need("R_theta"));
    s.xi.C_f = kernel_from_record(need("C_f"));
    s.xi.R_f = kernel_from_record(need("R_f"));
    s.xi.R_f_star = series_from_record(need("R_f_star"));
    s.xi.Gamma = series_from_record(need("Gamma"));
    return s;
}

}  // namespace dmft_sgd
