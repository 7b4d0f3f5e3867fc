#include "starm/io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <system_error>
#include <vector>

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

namespace starm {

namespace {

constexpr char kTensorMagic[4] = {'S', 'T', 'M', '1'};
constexpr char kMatrixMagic[4] = {'S', 'T', 'M', 'M'};

void write_u64(std::ostream& out, std::uint64_t value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(value));
}

std::uint64_t read_u64(std::istream& in, const std::filesystem::path& path) {
    std::uint64_t value = 0;
    if (!in.read(reinterpret_cast<char*>(&value), sizeof(value)))
        throw std::runtime_error("truncated header in " + path.string());
    return value;
}

std::filesystem::path temp_sibling(const std::filesystem::path& path) {
    auto tmp = path;
    tmp += ".tmp";
    return tmp;
}

void write_payload(const std::filesystem::path& path, const char magic[4],
                   std::uint64_t n1, std::uint64_t n2, std::uint64_t n3,
                   const double* data, const nlohmann::json* metadata) {
    const auto tmp = temp_sibling(path);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot open " + tmp.string() +
                                     " for writing");
        out.write(magic, 4);
        write_u64(out, n1);
        write_u64(out, n2);
        write_u64(out, n3);
        out.write(reinterpret_cast<const char*>(data),
                  static_cast<std::streamsize>(sizeof(double) * n1 * n2 * n3));
        if (metadata != nullptr) {
            const std::string text = metadata->dump();
            write_u64(out, text.size());
            out.write(text.data(), static_cast<std::streamsize>(text.size()));
        }
        if (!out)
            throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

struct Header {
    std::uint64_t n1 = 0, n2 = 0, n3 = 0;
};

Header read_header(std::istream& in, const char magic[4],
                   const std::filesystem::path& path) {
    char found[4] = {};
    if (!in.read(found, 4) || std::memcmp(found, magic, 4) != 0)
        throw std::runtime_error("bad magic in " + path.string());
    Header h;
    h.n1 = read_u64(in, path);
    h.n2 = read_u64(in, path);
    h.n3 = read_u64(in, path);
    return h;
}

void read_doubles(std::istream& in, double* dst, std::uint64_t count,
                  const std::filesystem::path& path) {
    if (!in.read(reinterpret_cast<char*>(dst),
                 static_cast<std::streamsize>(sizeof(double) * count)))
        throw std::runtime_error("truncated payload in " + path.string());
}

}  // namespace

void write_tensor(const std::filesystem::path& path, const Tensor3d& tensor,
                  const nlohmann::json* metadata) {
    write_payload(path, kTensorMagic, static_cast<std::uint64_t>(tensor.n1()),
                  static_cast<std::uint64_t>(tensor.n2()),
                  static_cast<std::uint64_t>(tensor.n3()), tensor.data(),
                  metadata);
}

Tensor3d read_tensor(const std::filesystem::path& path,
                     nlohmann::json* metadata) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    const Header h = read_header(in, kTensorMagic, path);
    Tensor3d tensor(static_cast<Index>(h.n1), static_cast<Index>(h.n2),
                    static_cast<Index>(h.n3));
    read_doubles(in, tensor.data(), h.n1 * h.n2 * h.n3, path);

    if (metadata != nullptr) *metadata = nlohmann::json();
    if (in.peek() != std::char_traits<char>::eof()) {
        const std::uint64_t bytes = read_u64(in, path);
        std::string text(bytes, '\0');
        if (!in.read(text.data(), static_cast<std::streamsize>(bytes)))
            throw std::runtime_error("truncated metadata in " + path.string());
        if (metadata != nullptr) *metadata = nlohmann::json::parse(text);
        if (in.peek() != std::char_traits<char>::eof())
            throw std::runtime_error("trailing bytes in " + path.string());
    }
    return tensor;
}

void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
    write_payload(path, kMatrixMagic, static_cast<std::uint64_t>(m.rows()),
                  static_cast<std::uint64_t>(m.cols()), 1, m.data(), nullptr);
}

Eigen::MatrixXd read_matrix(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    const Header h = read_header(in, kMatrixMagic, path);
    if (h.n3 != 1)
        throw std::runtime_error("matrix file with n3 != 1: " + path.string());
    Eigen::MatrixXd m(static_cast<Index>(h.n1), static_cast<Index>(h.n2));
    read_doubles(in, m.data(), h.n1 * h.n2, path);
    if (in.peek() != std::char_traits<char>::eof())
        throw std::runtime_error("trailing bytes in " + path.string());
    return m;
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& text) {
    const auto tmp = temp_sibling(path);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot open " + tmp.string() +
                                     " for writing");
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!out)
            throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string format_double(double value) {
    char buffer[64];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value,
                                      std::chars_format::general, 17);
    return std::string(buffer, result.ptr);
}

}  // namespace starm
