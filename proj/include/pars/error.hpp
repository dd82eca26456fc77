#pragma once

#include <stdexcept>
#include <string>

namespace pars {

// All contract violations and I/O failures surface as pars::Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// printf-style message builder.
std::string strf(const char* fmt, ...) __attribute__((format(printf, 1, 2)));

[[noreturn]] void fail(const char* fmt, ...) __attribute__((format(printf, 1, 2)));

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

template <typename First, typename... Args>
void require(bool cond, const char* fmt, First first, Args... args) {
  if (!cond) fail(fmt, first, args...);
}

}  // namespace pars
