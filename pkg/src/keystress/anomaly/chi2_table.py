"""Chi-squared quantiles, generated by tools/gen_chi2_table.py. Do not edit."""

CHI2_QUANTILES = {
    1: {0.5: 0.4549364231, 0.95: 3.8414588207, 0.975: 5.0238861873, 0.99: 6.634896601},
    2: {0.5: 1.3862943611, 0.95: 5.9914645471, 0.975: 7.3777589082, 0.99: 9.210340372},
    3: {0.5: 2.3659738844, 0.95: 7.8147279033, 0.975: 9.3484036045, 0.99: 11.3448667301},
    4: {0.5: 3.35669398, 0.95: 9.4877290368, 0.975: 11.1432867819, 0.99: 13.276704136},
    5: {0.5: 4.3514601911, 0.95: 11.0704976935, 0.975: 12.832501994, 0.99: 15.0862724694},
    6: {0.5: 5.3481206274, 0.95: 12.5915872437, 0.975: 14.4493753354, 0.99: 16.8118938298},
    7: {0.5: 6.3458111955, 0.95: 14.0671404493, 0.975: 16.0127642746, 0.99: 18.4753069066},
    8: {0.5: 7.3441214977, 0.95: 15.5073130559, 0.975: 17.5345461395, 0.99: 20.0902350297},
    9: {0.5: 8.3428326923, 0.95: 16.9189776046, 0.975: 19.0227677986, 0.99: 21.6659943335},
    10: {0.5: 9.3418177656, 0.95: 18.3070380533, 0.975: 20.4831773508, 0.99: 23.209251159},
}
