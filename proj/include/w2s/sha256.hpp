#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace w2s {

// Hex-encoded SHA-256. Backed by OpenSSL's EVP interface.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace w2s
