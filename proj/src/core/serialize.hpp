#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <fstream>
#include <string>

#include "core/common.hpp"

namespace tabret {

// Little-endian binary files with a fixed magic per format. Host byte order is
// assumed little-endian (checked at open).
class BinaryWriter {
public:
    BinaryWriter(const std::string& path, const std::string& magic) : out_(path, std::ios::binary) {
        if (!out_) fail(ErrorKind::Io, "cannot write file: " + path);
        check_endianness();
        out_.write(magic.data(), static_cast<std::streamsize>(magic.size()));
    }

    void write_u64(uint64_t v) { out_.write(reinterpret_cast<const char*>(&v), sizeof(v)); }

    void write_double(double v) { out_.write(reinterpret_cast<const char*>(&v), sizeof(v)); }

    void write_string(const std::string& s) {
        write_u64(s.size());
        out_.write(s.data(), static_cast<std::streamsize>(s.size()));
    }

    void write_matrix(const Eigen::MatrixXd& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) write_double(m(r, c));
    }

    void write_vector(const Eigen::VectorXd& v) {
        for (Eigen::Index i = 0; i < v.size(); ++i) write_double(v[i]);
    }

private:
    static void check_endianness() {
        uint16_t probe = 1;
        if (*reinterpret_cast<const unsigned char*>(&probe) != 1) {
            fail(ErrorKind::State, "binary model files require a little-endian host");
        }
    }

    std::ofstream out_;
};

class BinaryReader {
public:
    BinaryReader(const std::string& path, const std::string& magic) : in_(path, std::ios::binary), path_(path) {
        if (!in_) fail(ErrorKind::Io, "cannot open file: " + path);
        std::string found(magic.size(), '\0');
        in_.read(found.data(), static_cast<std::streamsize>(magic.size()));
        if (!in_ || found != magic) fail(ErrorKind::Parse, "bad magic in " + path + " (expected " + magic + ")");
    }

    uint64_t read_u64() {
        uint64_t v = 0;
        in_.read(reinterpret_cast<char*>(&v), sizeof(v));
        if (!in_) fail(ErrorKind::Parse, "truncated file: " + path_);
        return v;
    }

    double read_double() {
        double v = 0.0;
        in_.read(reinterpret_cast<char*>(&v), sizeof(v));
        if (!in_) fail(ErrorKind::Parse, "truncated file: " + path_);
        return v;
    }

    std::string read_string() {
        uint64_t len = read_u64();
        std::string s(len, '\0');
        in_.read(s.data(), static_cast<std::streamsize>(len));
        if (!in_) fail(ErrorKind::Parse, "truncated file: " + path_);
        return s;
    }

    Eigen::MatrixXd read_matrix(uint64_t rows, uint64_t cols) {
        Eigen::MatrixXd m(rows, cols);
        for (uint64_t r = 0; r < rows; ++r)
            for (uint64_t c = 0; c < cols; ++c) m(r, c) = read_double();
        return m;
    }

    Eigen::VectorXd read_vector(uint64_t size) {
        Eigen::VectorXd v(size);
        for (uint64_t i = 0; i < size; ++i) v[i] = read_double();
        return v;
    }

private:
    std::ifstream in_;
    std::string path_;
};

}  // namespace tabret
