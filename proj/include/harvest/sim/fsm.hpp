#pragma once

#include <array>
#include <string_view>
#include <utility>

namespace harvest::sim {

enum class PickerState {
  Start,
  WalkEmptyTrayHeadland,
  WalkEmptyTrayFurrow,
  Picking,
  WaitingForRobot,
  ExchangeTrays,
  WalkPartlyFullTrayHeadland,
  WalkPartlyFullTrayFurrow,
  TransportFullTrayFurrow,
  TransportFullTrayHeadland,
  IdleInQueue,
  EmptyTrayBackHeadland,
  EmptyTrayBackFurrow,
  Stop,
};

// Ten states. Older descriptions of the robot controller count nine; the
// start state is kept separate here.
enum class RobotState {
  Start,
  Available,
  TranspEmptyTrayToDispatchLocation,
  WaitAtDispatchLocation,
  DriveToFullTrayLocation,
  EmptyTrayBack,
  ExchangeTrays,
  TranspFullTrayBack,
  IdleInQueue,
  Stop,
};

constexpr std::string_view name(PickerState s) {
  switch (s) {
    case PickerState::Start: return "Start";
    case PickerState::WalkEmptyTrayHeadland: return "Walk-Empty-Tray-Headland";
    case PickerState::WalkEmptyTrayFurrow: return "Walk-Empty-Tray-Furrow";
    case PickerState::Picking: return "Picking";
    case PickerState::WaitingForRobot: return "Waiting-For-Robot";
    case PickerState::ExchangeTrays: return "Exchange-Trays";
    case PickerState::WalkPartlyFullTrayHeadland: return "Walk-Partly-Full-Tray-Headland";
    case PickerState::WalkPartlyFullTrayFurrow: return "Walk-Partly-Full-Tray-Furrow";
    case PickerState::TransportFullTrayFurrow: return "Transport-Full-Tray-Furrow";
    case PickerState::TransportFullTrayHeadland: return "Transport-Full-Tray-Headland";
    case PickerState::IdleInQueue: return "Idle-In-Queue";
    case PickerState::EmptyTrayBackHeadland: return "Empty-Tray-Back-Headland";
    case PickerState::EmptyTrayBackFurrow: return "Empty-Tray-Back-Furrow";
    case PickerState::Stop: return "Stop";
  }
  return "?";
}

constexpr std::string_view name(RobotState s) {
  switch (s) {
    case RobotState::Start: return "Start";
    case RobotState::Available: return "Available";
    case RobotState::TranspEmptyTrayToDispatchLocation: return "Transp-Empty-Tray-to-Dispatch-Location";
    case RobotState::WaitAtDispatchLocation: return "Wait-At-Dispatch-Location";
    case RobotState::DriveToFullTrayLocation: return "Drive-To-Full-Tray-Location";
    case RobotState::EmptyTrayBack: return "Empty-Tray-Back";
    case RobotState::ExchangeTrays: return "Exchange-Trays";
    case RobotState::TranspFullTrayBack: return "Transp-Full-Tray-Back";
    case RobotState::IdleInQueue: return "Idle-In-Queue";
    case RobotState::Stop: return "Stop";
  }
  return "?";
}

using P = PickerState;
inline constexpr std::array<std::pair<PickerState, PickerState>, 21> kPickerEdges{{
    {P::Start, P::WalkEmptyTrayHeadland},
    {P::WalkEmptyTrayHeadland, P::WalkEmptyTrayFurrow},
    {P::WalkEmptyTrayFurrow, P::Picking},
    {P::Picking, P::WaitingForRobot},
    {P::Picking, P::TransportFullTrayFurrow},
    {P::Picking, P::WalkPartlyFullTrayHeadland},
    {P::Picking, P::Stop},
    {P::WaitingForRobot, P::ExchangeTrays},
    {P::WaitingForRobot, P::TransportFullTrayFurrow},
    {P::ExchangeTrays, P::Picking},
    {P::ExchangeTrays, P::WalkEmptyTrayHeadland},
    {P::ExchangeTrays, P::Stop},
    {P::WalkPartlyFullTrayHeadland, P::WalkPartlyFullTrayFurrow},
    {P::WalkPartlyFullTrayFurrow, P::Picking},
    {P::TransportFullTrayFurrow, P::TransportFullTrayHeadland},
    {P::TransportFullTrayHeadland, P::IdleInQueue},
    {P::IdleInQueue, P::EmptyTrayBackHeadland},
    {P::IdleInQueue, P::WalkEmptyTrayHeadland},
    {P::IdleInQueue, P::Stop},
    {P::EmptyTrayBackHeadland, P::EmptyTrayBackFurrow},
    {P::EmptyTrayBackFurrow, P::Picking},
}};

using R = RobotState;
inline constexpr std::array<std::pair<RobotState, RobotState>, 14> kRobotEdges{{
    {R::Start, R::Available},
    {R::Available, R::TranspEmptyTrayToDispatchLocation},
    {R::Available, R::DriveToFullTrayLocation},
    {R::Available, R::Stop},
    {R::TranspEmptyTrayToDispatchLocation, R::WaitAtDispatchLocation},
    {R::TranspEmptyTrayToDispatchLocation, R::DriveToFullTrayLocation},
    {R::TranspEmptyTrayToDispatchLocation, R::EmptyTrayBack},
    {R::WaitAtDispatchLocation, R::DriveToFullTrayLocation},
    {R::WaitAtDispatchLocation, R::EmptyTrayBack},
    {R::DriveToFullTrayLocation, R::ExchangeTrays},
    {R::ExchangeTrays, R::TranspFullTrayBack},
    {R::TranspFullTrayBack, R::IdleInQueue},
    {R::IdleInQueue, R::Available},
    {R::EmptyTrayBack, R::Available},
}};

template <typename State, std::size_t N>
constexpr bool edge_in(const std::array<std::pair<State, State>, N>& edges, State from, State to) {
  for (const auto& e : edges) {
    if (e.first == from && e.second == to) return true;
  }
  return false;
}

constexpr bool is_legal(PickerState from, PickerState to) { return edge_in(kPickerEdges, from, to); }
constexpr bool is_legal(RobotState from, RobotState to) { return edge_in(kRobotEdges, from, to); }

}  // namespace harvest::sim
