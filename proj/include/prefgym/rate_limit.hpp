#pragma once

#include <chrono>
#include <mutex>

namespace prefgym {

// Blocking token bucket shared by every caller of one remote endpoint.
class TokenBucket {
 public:
  // `rate` tokens per second, at most `burst` stored. rate <= 0 disables.
  TokenBucket(double rate, double burst);

  void acquire();
  bool try_acquire();

 private:
  void refill(std::chrono::steady_clock::time_point now);

  double rate_;
  double burst_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
  std::mutex mu_;
};

}  // namespace prefgym
