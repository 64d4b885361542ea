#pragma once

#include "watersearch/adversary.hpp"
#include "watersearch/detection.hpp"
#include "watersearch/errors.hpp"
#include "watersearch/evaluation.hpp"
#include "watersearch/io.hpp"
#include "watersearch/keys_partition.hpp"
#include "watersearch/parallel.hpp"
#include "watersearch/quality_metrics.hpp"
#include "watersearch/rng.hpp"
#include "watersearch/schemes.hpp"
#include "watersearch/search_generation.hpp"
#include "watersearch/stat_kernels.hpp"
#include "watersearch/theory_lab.hpp"
#include "watersearch/token_model.hpp"
