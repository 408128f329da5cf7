#pragma once

#define HISTOCONV_VERSION "0.1.0"
