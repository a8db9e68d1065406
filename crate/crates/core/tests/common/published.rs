/// Success probabilities per band, transcribed row by row from the
/// published tables: `[band][scheme][condition]`.
#[rustfmt::skip]
pub const PUBLISHED: [[[f64; 4]; 11]; 11] = [
    // FB1
    [
        [0.83, 0.84, 0.89, 0.86], // BPSK
        [0.99, 0.78, 0.80, 0.79], // QPSK
        [0.91, 0.81, 0.87, 0.81], // 8-PSK
        [0.79, 0.78, 0.91, 0.78], // 16-QAM
        [0.88, 0.81, 0.88, 0.75], // 32-QAM
        [0.92, 0.85, 0.84, 0.72], // 64-QAM
        [0.87, 0.80, 0.83, 0.74], // 128-QAM
        [0.91, 0.82, 0.86, 0.70], // 256-QAM
        [0.93, 0.86, 0.90, 0.68], // 512-QAM
        [0.85, 0.79, 0.81, 0.71], // 1024-QAM
        [0.89, 0.83, 0.84, 0.69], // 2048-QAM
    ],
    // FB2
    [
        [0.72, 0.84, 0.89, 0.83], // BPSK
        [0.94, 0.87, 0.67, 0.66], // QPSK
        [0.78, 0.79, 0.72, 0.72], // 8-PSK
        [0.74, 0.71, 0.93, 0.73], // 16-QAM
        [0.79, 0.75, 0.87, 0.71], // 32-QAM
        [0.81, 0.77, 0.85, 0.70], // 64-QAM
        [0.82, 0.78, 0.86, 0.69], // 128-QAM
        [0.85, 0.80, 0.88, 0.68], // 256-QAM
        [0.83, 0.81, 0.84, 0.67], // 512-QAM
        [0.88, 0.83, 0.82, 0.65], // 1024-QAM
        [0.86, 0.85, 0.80, 0.64], // 2048-QAM
    ],
    // FB3
    [
        [0.56, 0.61, 0.83, 0.68], // BPSK
        [0.82, 0.81, 0.88, 0.65], // QPSK
        [0.83, 0.81, 0.61, 0.61], // 8-PSK
        [0.63, 0.86, 0.59, 0.89], // 16-QAM
        [0.68, 0.82, 0.64, 0.71], // 32-QAM
        [0.72, 0.83, 0.65, 0.73], // 64-QAM
        [0.74, 0.84, 0.66, 0.75], // 128-QAM
        [0.76, 0.85, 0.67, 0.77], // 256-QAM
        [0.78, 0.86, 0.68, 0.79], // 512-QAM
        [0.80, 0.87, 0.69, 0.81], // 1024-QAM
        [0.82, 0.88, 0.70, 0.83], // 2048-QAM
    ],
    // FB4
    [
        [0.088, 0.088, 0.091, 0.081], // BPSK
        [0.089, 0.094, 0.083, 0.096], // QPSK
        [0.094, 0.091, 0.096, 0.096], // 8-PSK
        [0.086, 0.084, 0.084, 0.085], // 16-QAM
        [0.091, 0.087, 0.088, 0.086], // 32-QAM
        [0.092, 0.089, 0.089, 0.087], // 64-QAM
        [0.093, 0.090, 0.090, 0.088], // 128-QAM
        [0.094, 0.091, 0.091, 0.089], // 256-QAM
        [0.095, 0.092, 0.092, 0.090], // 512-QAM
        [0.096, 0.093, 0.093, 0.091], // 1024-QAM
        [0.097, 0.094, 0.094, 0.092], // 2048-QAM
    ],
    // FB5
    [
        [0.0070, 0.0070, 0.0060, 0.0010], // BPSK
        [0.0075, 0.0073, 0.0065, 0.0020], // QPSK
        [0.0080, 0.0079, 0.0067, 0.0040], // 8-PSK
        [0.0082, 0.0081, 0.0076, 0.0064], // 16-QAM
        [0.0089, 0.0082, 0.0078, 0.0063], // 32-QAM
        [0.0091, 0.0084, 0.0080, 0.0062], // 64-QAM
        [0.0090, 0.0086, 0.0082, 0.0061], // 128-QAM
        [0.0093, 0.0088, 0.0083, 0.0060], // 256-QAM
        [0.0092, 0.0087, 0.0084, 0.0059], // 512-QAM
        [0.0095, 0.0089, 0.0085, 0.0058], // 1024-QAM
        [0.0096, 0.0091, 0.0086, 0.0057], // 2048-QAM
    ],
    // FB6
    [
        [0.79, 0.81, 0.76, 0.67], // BPSK
        [0.88, 0.82, 0.78, 0.66], // QPSK
        [0.85, 0.84, 0.79, 0.65], // 8-PSK
        [0.90, 0.85, 0.80, 0.64], // 16-QAM
        [0.92, 0.87, 0.81, 0.63], // 32-QAM
        [0.93, 0.88, 0.82, 0.62], // 64-QAM
        [0.95, 0.89, 0.83, 0.61], // 128-QAM
        [0.94, 0.90, 0.84, 0.60], // 256-QAM
        [0.96, 0.91, 0.85, 0.59], // 512-QAM
        [0.97, 0.92, 0.86, 0.58], // 1024-QAM
        [0.98, 0.93, 0.87, 0.57], // 2048-QAM
    ],
    // FB7
    [
        [0.82, 0.80, 0.74, 0.066], // BPSK
        [0.87, 0.82, 0.76, 0.065], // QPSK
        [0.89, 0.84, 0.77, 0.064], // 8-PSK
        [0.91, 0.85, 0.78, 0.063], // 16-QAM
        [0.93, 0.87, 0.79, 0.062], // 32-QAM
        [0.94, 0.88, 0.80, 0.061], // 64-QAM
        [0.95, 0.89, 0.81, 0.060], // 128-QAM
        [0.96, 0.90, 0.82, 0.059], // 256-QAM
        [0.97, 0.91, 0.83, 0.058], // 512-QAM
        [0.98, 0.92, 0.84, 0.057], // 1024-QAM
        [0.99, 0.93, 0.85, 0.0056], // 2048-QAM
    ],
    // FB8
    [
        [0.85, 0.82, 0.78, 0.65], // BPSK
        [0.89, 0.84, 0.79, 0.64], // QPSK
        [0.92, 0.86, 0.80, 0.63], // 8-PSK
        [0.93, 0.87, 0.81, 0.62], // 16-QAM
        [0.94, 0.88, 0.82, 0.61], // 32-QAM
        [0.95, 0.89, 0.83, 0.60], // 64-QAM
        [0.96, 0.90, 0.84, 0.59], // 128-QAM
        [0.97, 0.91, 0.85, 0.58], // 256-QAM
        [0.98, 0.92, 0.86, 0.57], // 512-QAM
        [0.99, 0.93, 0.87, 0.56], // 1024-QAM
        [1.00, 0.94, 0.88, 0.55], // 2048-QAM
    ],
    // FB9
    [
        [0.88, 0.84, 0.80, 0.64], // BPSK
        [0.92, 0.85, 0.81, 0.63], // QPSK
        [0.93, 0.86, 0.82, 0.62], // 8-PSK
        [0.95, 0.87, 0.83, 0.61], // 16-QAM
        [0.96, 0.88, 0.84, 0.60], // 32-QAM
        [0.97, 0.89, 0.85, 0.59], // 64-QAM
        [0.98, 0.90, 0.86, 0.58], // 128-QAM
        [0.99, 0.91, 0.87, 0.57], // 256-QAM
        [1.00, 0.92, 0.88, 0.56], // 512-QAM
        [0.99, 0.93, 0.89, 0.55], // 1024-QAM
        [0.98, 0.94, 0.90, 0.54], // 2048-QAM
    ],
    // FB10
    [
        [0.90, 0.85, 0.82, 0.63], // BPSK
        [0.93, 0.86, 0.83, 0.62], // QPSK
        [0.94, 0.87, 0.84, 0.61], // 8-PSK
        [0.96, 0.88, 0.85, 0.60], // 16-QAM
        [0.97, 0.89, 0.86, 0.59], // 32-QAM
        [0.98, 0.90, 0.87, 0.58], // 64-QAM
        [0.99, 0.91, 0.88, 0.57], // 128-QAM
        [1.00, 0.92, 0.89, 0.56], // 256-QAM
        [0.99, 0.93, 0.90, 0.55], // 512-QAM
        [0.98, 0.94, 0.91, 0.54], // 1024-QAM
        [0.97, 0.95, 0.92, 0.53], // 2048-QAM
    ],
    // FB11
    [
        [0.91, 0.87, 0.84, 0.62], // BPSK
        [0.94, 0.88, 0.85, 0.61], // QPSK
        [0.95, 0.89, 0.86, 0.60], // 8-PSK
        [0.97, 0.90, 0.87, 0.59], // 16-QAM
        [0.98, 0.91, 0.88, 0.58], // 32-QAM
        [0.99, 0.92, 0.89, 0.57], // 64-QAM
        [1.00, 0.93, 0.90, 0.56], // 128-QAM
        [0.99, 0.94, 0.91, 0.55], // 256-QAM
        [0.98, 0.95, 0.92, 0.54], // 512-QAM
        [0.97, 0.96, 0.93, 0.53], // 1024-QAM
        [0.96, 0.97, 0.94, 0.52], // 2048-QAM
    ],
];
