#pragma once
#include <stdexcept>
#include <string>
#include <sstream>

namespace vf {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {
[[noreturn]] inline void raise(const char* cond, const char* file, int line, const std::string& msg) {
    std::ostringstream os;
    os << file << ":" << line << ": check failed (" << cond << ")";
    if (!msg.empty()) os << ": " << msg;
    throw Error(os.str());
}
} // namespace detail

} // namespace vf

#define VF_CHECK(cond, ...)                                                        \
    do {                                                                           \
        if (!(cond)) {                                                             \
            std::ostringstream vf_os_;                                             \
            __VA_OPT__(vf_os_ << __VA_ARGS__;)                                     \
            ::vf::detail::raise(#cond, __FILE__, __LINE__, vf_os_.str());          \
        }                                                                          \
    } while (0)

#define VF_FAIL(...)                                                               \
    do {                                                                           \
        std::ostringstream vf_os_;                                                 \
        __VA_OPT__(vf_os_ << __VA_ARGS__;)                                         \
        ::vf::detail::raise("failure", __FILE__, __LINE__, vf_os_.str());          \
    } while (0)
