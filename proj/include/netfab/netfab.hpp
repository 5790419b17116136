#pragma once

#include "netfab/common.hpp"
#include "netfab/ipv4.hpp"
#include "netfab/packet.hpp"
#include "netfab/l2_fabric.hpp"
#include "netfab/l3_routing.hpp"
#include "netfab/firewall_nat.hpp"
#include "netfab/resilience.hpp"
#include "netfab/link.hpp"
#include "netfab/scenario.hpp"
#include "netfab/scenario_io.hpp"
#include "netfab/reachability.hpp"
#include "netfab/engine.hpp"
#include "netfab/spring8.hpp"
#include "netfab/verify.hpp"
#include "netfab/report.hpp"
