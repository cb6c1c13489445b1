#include "apkr/io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "apkr/errors.hpp"

namespace apkr {

namespace {

constexpr char kMagic[4] = {'A', 'P', 'K', 'R'};
constexpr std::uint16_t kVersion = 1;

bool has_csv_suffix(const std::string& path) {
    return path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
}

template <typename T>
void write_le(std::ofstream& out, T value) {
    // Little-endian host assumed; enforced below at file-open time.
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::ifstream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    return value;
}

void check_endianness() {
    const std::uint16_t probe = 1;
    if (*reinterpret_cast<const std::uint8_t*>(&probe) != 1) {
        throw IoError("matrix io requires a little-endian host");
    }
}

void write_csv(const std::string& path, const DenseMatrix& m) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    char buf[64];
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
            out << buf;
            if (j + 1 < m.cols()) out << ',';
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

DenseMatrix read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            row.push_back(std::stod(cell));
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw IoError("ragged csv rows in " + path);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw IoError("empty csv file: " + path);
    DenseMatrix m(static_cast<Index>(rows.size()),
                  static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    }
    return m;
}

}  // namespace

void write_matrix(const std::string& path, const DenseMatrix& m) {
    if (has_csv_suffix(path)) {
        write_csv(path, m);
        return;
    }
    check_endianness();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(kMagic, 4);
    write_le(out, kVersion);
    write_le(out, static_cast<std::uint64_t>(m.rows()));
    write_le(out, static_cast<std::uint64_t>(m.cols()));
    // Row-major on disk matches the in-memory layout.
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double)) * m.size());
    if (!out) throw IoError("write failed: " + path);
}

DenseMatrix read_matrix(const std::string& path) {
    if (has_csv_suffix(path)) return read_csv(path);
    check_endianness();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw IoError("bad magic bytes in " + path);
    }
    auto version = read_le<std::uint16_t>(in);
    if (version != kVersion) {
        throw IoError("unsupported format version " + std::to_string(version) +
                      " in " + path);
    }
    auto rows = read_le<std::uint64_t>(in);
    auto cols = read_le<std::uint64_t>(in);
    if (rows == 0 || cols == 0 || rows > (1ull << 32) || cols > (1ull << 32)) {
        throw IoError("implausible dimensions in " + path);
    }
    DenseMatrix m(static_cast<Index>(rows), static_cast<Index>(cols));
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double)) * m.size());
    if (!in) throw IoError("truncated matrix data in " + path);
    return m;
}

void write_vector(const std::string& path, const Vector& v) {
    DenseMatrix m(v.size(), 1);
    m.col(0) = v;
    write_matrix(path, m);
}

Vector read_vector(const std::string& path) {
    DenseMatrix m = read_matrix(path);
    if (m.cols() != 1) {
        throw IoError("expected a single-column matrix in " + path);
    }
    return m.col(0);
}

}  // namespace apkr
