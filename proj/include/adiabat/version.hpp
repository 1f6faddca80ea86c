#pragma once

#define ADIABAT_VERSION_MAJOR 0
#define ADIABAT_VERSION_MINOR 1
#define ADIABAT_VERSION_PATCH 0
#define ADIABAT_VERSION_STRING "0.1.0"
