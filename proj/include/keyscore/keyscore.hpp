#pragma once

#include "keyscore/calibration.hpp"
#include "keyscore/confidence.hpp"
#include "keyscore/corpus.hpp"
#include "keyscore/embeddings.hpp"
#include "keyscore/errors.hpp"
#include "keyscore/evaluate.hpp"
#include "keyscore/matching.hpp"
#include "keyscore/porter.hpp"
#include "keyscore/positional.hpp"
#include "keyscore/report.hpp"
#include "keyscore/softkeyscore.hpp"
#include "keyscore/stats.hpp"
#include "keyscore/text.hpp"
#include "keyscore/textnorm.hpp"
