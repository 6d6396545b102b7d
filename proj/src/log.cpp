#include "dpq/log.hpp"

#include <iostream>
#include <utility>

namespace dpq {

namespace {
WarnHook& hook() {
  static WarnHook h = [](const std::string& m) { std::cerr << "[warn] " << m << "\n"; };
  return h;
}
}  // namespace

WarnHook setWarnHook(WarnHook newHook) {
  WarnHook old = std::move(hook());
  hook() = std::move(newHook);
  return old;
}

void warn(const std::string& message) {
  if (hook()) hook()(message);
}

}  // namespace dpq
