"""Supported MITRE ATT&CK technique catalog and the application-protocol port table.

The detection logic for most techniques is heuristic: it captures a plausible
network-metadata footprint of the behaviour, not an authoritative signature.
Every threshold involved lives in :class:`ttpflow.rules.RuleConfig` and can be
overridden per run.
"""

from __future__ import annotations

T1021_001 = "T1021.001"  # Remote Services: RDP
T1021_004 = "T1021.004"  # Remote Services: SSH
T1053 = "T1053"          # Scheduled Task/Job
T1071 = "T1071"          # Application Layer Protocol
T1090 = "T1090"          # Proxy
T1105 = "T1105"          # Ingress Tool Transfer
T1124 = "T1124"          # System Time Discovery
T1135 = "T1135"          # Network Share Discovery
T1550_003 = "T1550.003"  # Use Alternate Authentication Material: Pass the Ticket
T1557_001 = "T1557.001"  # Adversary-in-the-Middle: LLMNR/NBT-NS Poisoning
T1563_001 = "T1563.001"  # Remote Service Session Hijacking: SSH
T1563_002 = "T1563.002"  # Remote Service Session Hijacking: RDP
T1570 = "T1570"          # Lateral Tool Transfer
T1571 = "T1571"          # Non-Standard Port
T1590 = "T1590"          # Gather Victim Network Information

CATALOG: tuple[str, ...] = (
    T1021_001,
    T1021_004,
    T1053,
    T1071,
    T1090,
    T1105,
    T1124,
    T1135,
    T1550_003,
    T1557_001,
    T1563_001,
    T1563_002,
    T1570,
    T1571,
    T1590,
)

# Techniques with enough population skew structure to support a per-technique
# classifier; all others are handled by the always-malicious fallback rule.
TRAINABLE: frozenset[str] = frozenset({T1071, T1105, T1124, T1135, T1571})

TECHNIQUE_NAMES: dict[str, str] = {
    T1021_001: "Remote Services: RDP",
    T1021_004: "Remote Services: SSH",
    T1053: "Scheduled Task/Job",
    T1071: "Application Layer Protocol",
    T1090: "Proxy",
    T1105: "Ingress Tool Transfer",
    T1124: "System Time Discovery",
    T1135: "Network Share Discovery",
    T1550_003: "Use Alternate Authentication Material",
    T1557_001: "LLMNR/NBT-NS Adversary-in-the-Middle",
    T1563_001: "Remote Service Session Hijacking: SSH",
    T1563_002: "Remote Service Session Hijacking: RDP",
    T1570: "Lateral Tool Transfer",
    T1571: "Non-Standard Port",
    T1590: "Gather Victim Network Information",
}

TACTICS: dict[str, str] = {
    T1021_001: "Lateral Movement",
    T1021_004: "Lateral Movement",
    T1053: "Execution",
    T1071: "Command and Control",
    T1090: "Command and Control",
    T1105: "Command and Control",
    T1124: "Discovery",
    T1135: "Discovery",
    T1550_003: "Lateral Movement",
    T1557_001: "Credential Access",
    T1563_001: "Lateral Movement",
    T1563_002: "Lateral Movement",
    T1570: "Lateral Movement",
    T1571: "Command and Control",
    T1590: "Reconnaissance",
}

# 50 well-known application-layer protocols keyed by their applabel value
# (the flowmeter convention: applabel equals the protocol's canonical port).
# Values are the full default-port sets used by the non-standard-port rule.
PORT_PROTOCOL_TABLE: dict[int, frozenset[int]] = {
    21: frozenset({20, 21}),       # ftp (data + control)
    22: frozenset({22}),           # ssh
    23: frozenset({23}),           # telnet
    25: frozenset({25}),           # smtp
    53: frozenset({53}),           # dns
    67: frozenset({67, 68}),       # dhcp
    69: frozenset({69}),           # tftp
    80: frozenset({80}),           # http
    88: frozenset({88}),           # kerberos
    110: frozenset({110}),         # pop3
    111: frozenset({111}),         # sunrpc
    119: frozenset({119}),         # nntp
    123: frozenset({123}),         # ntp
    135: frozenset({135}),         # msrpc endpoint mapper
    137: frozenset({137}),         # netbios-ns
    139: frozenset({139}),         # netbios-ssn
    143: frozenset({143}),         # imap
    161: frozenset({161, 162}),    # snmp (+trap)
    179: frozenset({179}),         # bgp
    194: frozenset({194, 6667}),   # irc
    389: frozenset({389}),         # ldap
    443: frozenset({443}),         # https
    445: frozenset({445}),         # smb
    465: frozenset({465}),         # smtps
    500: frozenset({500, 4500}),   # ike (+nat-t)
    514: frozenset({514}),         # syslog
    520: frozenset({520}),         # rip
    554: frozenset({554}),         # rtsp
    587: frozenset({587}),         # smtp submission
    631: frozenset({631}),         # ipp
    636: frozenset({636}),         # ldaps
    853: frozenset({853}),         # dns-over-tls
    873: frozenset({873}),         # rsync
    993: frozenset({993}),         # imaps
    995: frozenset({995}),         # pop3s
    1080: frozenset({1080}),       # socks
    1194: frozenset({1194}),       # openvpn
    1433: frozenset({1433}),       # mssql
    1521: frozenset({1521}),       # oracle tns
    1723: frozenset({1723}),       # pptp
    1883: frozenset({1883}),       # mqtt
    2049: frozenset({2049}),       # nfs
    3128: frozenset({3128}),       # http proxy
    3306: frozenset({3306}),       # mysql
    3389: frozenset({3389}),       # rdp
    5060: frozenset({5060, 5061}), # sip (+tls)
    5222: frozenset({5222}),       # xmpp
    5353: frozenset({5353}),       # mdns
    5432: frozenset({5432}),       # postgres
    6379: frozenset({6379}),       # redis
}

assert len(PORT_PROTOCOL_TABLE) == 50

# Destination ports associated with proxy/Tor relays, used by the proxy rule.
PROXY_PORTS: frozenset[int] = frozenset({1080, 3128, 8118, 9001, 9030, 9050, 9150})

# Applabel values for the services some heuristics key on.
APPLABEL_SSH = 22
APPLABEL_HTTP = 80
APPLABEL_KERBEROS = 88
APPLABEL_NTP = 123
APPLABEL_NETBIOS = 139
APPLABEL_HTTPS = 443
APPLABEL_SMB = 445
APPLABEL_SOCKS = 1080
APPLABEL_RDP = 3389
APPLABEL_FTP = 21


def is_trainable(technique_id: str) -> bool:
    return technique_id in TRAINABLE
