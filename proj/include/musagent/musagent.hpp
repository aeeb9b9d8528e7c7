#pragma once

#include "musagent/beat.hpp"
#include "musagent/cli.hpp"
#include "musagent/config.hpp"
#include "musagent/coordinator.hpp"
#include "musagent/errors.hpp"
#include "musagent/evaluation.hpp"
#include "musagent/format.hpp"
#include "musagent/harmonic.hpp"
#include "musagent/ingest.hpp"
#include "musagent/kern.hpp"
#include "musagent/manifest.hpp"
#include "musagent/metrics.hpp"
#include "musagent/midi.hpp"
#include "musagent/musicxml.hpp"
#include "musagent/musicxml_writer.hpp"
#include "musagent/reference.hpp"
#include "musagent/render.hpp"
#include "musagent/report.hpp"
#include "musagent/score.hpp"
#include "musagent/structural.hpp"
#include "musagent/stylistic.hpp"
