#pragma once

#include "otpsi/aggregator.hpp"
#include "otpsi/analysis.hpp"
#include "otpsi/bench.hpp"
#include "otpsi/channel.hpp"
#include "otpsi/common.hpp"
#include "otpsi/element.hpp"
#include "otpsi/field.hpp"
#include "otpsi/ingest.hpp"
#include "otpsi/io.hpp"
#include "otpsi/keyed_hash.hpp"
#include "otpsi/net_roles.hpp"
#include "otpsi/oprf.hpp"
#include "otpsi/oprss.hpp"
#include "otpsi/oracle.hpp"
#include "otpsi/params.hpp"
#include "otpsi/runtime.hpp"
#include "otpsi/share_gen.hpp"
#include "otpsi/table.hpp"
#include "otpsi/wire.hpp"
