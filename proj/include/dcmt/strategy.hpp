#ifndef DCMT_STRATEGY_HPP
#define DCMT_STRATEGY_HPP

#include <array>
#include <optional>
#include <string_view>

namespace dcmt {

enum class Strategy {
  marl_lt_dsk,
  marl_lt_sk,
  marl_el_sk,
  marl_el_smax,
  marl_el_lelf,
  mwr_el_lelf,
  umw_fifo,
};

inline constexpr std::array<Strategy, 7> kAllStrategies = {
    Strategy::marl_lt_dsk, Strategy::marl_lt_sk,  Strategy::marl_el_sk, Strategy::marl_el_smax,
    Strategy::marl_el_lelf, Strategy::mwr_el_lelf, Strategy::umw_fifo,
};

enum class SchedulerKind { drop_send_keep, send_keep, send_max, lelf, fifo };

struct StrategyTraits {
  bool learned_router = false;
  bool learned_schedulers = false;
  bool effective_indexing = false;  // scheduler index space uses EL instead of lifetime
  bool effective_expiry = false;    // network also discards EL <= 0 packets
  bool fifo = false;
  SchedulerKind scheduler = SchedulerKind::lelf;
  int action_arity = 1;  // raw actor outputs per scheduler index
};

[[nodiscard]] StrategyTraits traits(Strategy s);
[[nodiscard]] std::string_view to_string(Strategy s);
[[nodiscard]] std::optional<Strategy> parse_strategy(std::string_view name);
[[nodiscard]] inline bool is_learned(Strategy s) { return traits(s).learned_router || traits(s).learned_schedulers; }

}  // namespace dcmt

#endif  // DCMT_STRATEGY_HPP
