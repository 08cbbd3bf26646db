#include "fitngp/errors.hpp"

namespace fitngp {

namespace {

std::string decorate(const std::string& what, std::int64_t byte_offset, std::int64_t line)
{
    if (line >= 0) {
        return what + " (line " + std::to_string(line) + ")";
    }
    if (byte_offset >= 0) {
        return what + " (byte offset " + std::to_string(byte_offset) + ")";
    }
    return what;
}

}  // namespace

FormatError::FormatError(const std::string& what, std::int64_t byte_offset, std::int64_t line)
    : std::runtime_error(decorate(what, byte_offset, line)), byte_offset_(byte_offset), line_(line)
{
}

}  // namespace fitngp
