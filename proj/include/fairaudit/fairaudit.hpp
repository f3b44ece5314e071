#pragma once

#include "fairaudit/errors.hpp"
#include "fairaudit/stat_kernel.hpp"
#include "fairaudit/decision_core.hpp"
#include "fairaudit/model_audit.hpp"
#include "fairaudit/label_audit.hpp"
#include "fairaudit/group_compare.hpp"
#include "fairaudit/synthetic.hpp"
#include "fairaudit/ingest.hpp"
#include "fairaudit/report.hpp"
#include "fairaudit/audit_cli.hpp"
