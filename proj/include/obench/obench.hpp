#pragma once

#include "obench/analyze.hpp"
#include "obench/codec.hpp"
#include "obench/config.hpp"
#include "obench/error.hpp"
#include "obench/experiment.hpp"
#include "obench/link_selftest.hpp"
#include "obench/metrics.hpp"
#include "obench/netlink.hpp"
#include "obench/offload.hpp"
#include "obench/shaping_proxy.hpp"
#include "obench/socket.hpp"
#include "obench/stats.hpp"
#include "obench/workloads.hpp"
